//! Simulation and analysis toolkit for centimeter-scale photonic-crystal
//! nanofiber cavities.
//!
//! The crate is organized around the measurement workflow for a long
//! fiber cavity formed by two apodized nano-crater gratings:
//!
//! - [`units`] — domain newtypes (rates, lengths, effective index) and the
//!   ordinary-frequency/angular-frequency bridge.
//! - [`spectrum`] — the validated spectrum container shared by all modules.
//! - [`gratingsim`] — forward transfer-matrix simulator for the compound
//!   cavity (two apodized gratings separated by a bare-fiber gap).
//! - [`specfit`] — peak detection, Lorentzian/Gaussian least-squares fits,
//!   free-spectral-range and finesse estimation.
//! - [`response`] — analytic two-sided lossy cavity model, on-resonance
//!   transmission/reflection relations and intra-cavity loss extraction.
//! - [`qed`] — single-photon Rabi frequency, cooperativity and coupling
//!   regime figures of merit.
//!
//! All stored rates are ordinary frequencies in Hz; angular formulas are
//! evaluated through [`units::angular`].

pub mod gratingsim;
pub mod qed;
pub mod response;
pub mod specfit;
pub mod spectrum;
pub mod units;

pub use spectrum::{AxisKind, Spectrum, SpectrumError};
pub use units::{angular, optical_length, EffectiveIndex, Length, RateHz, UnitError, C_VACUUM};
