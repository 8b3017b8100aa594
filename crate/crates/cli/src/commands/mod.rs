pub mod analyze;
pub mod fitloss;
pub mod qed;
pub mod simulate;
