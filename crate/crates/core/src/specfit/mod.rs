//! Spectrum analysis: peak detection, Lorentzian/Gaussian least-squares
//! fitting, FSR and finesse estimation.

mod lineshape;
mod lm;
mod modes;
mod peaks;

pub use lineshape::{
    fit_gaussian_profile, fit_lorentzian, fit_lorentzian_values, GaussianFit, LorentzianFit,
};
pub use lm::{levenberg_marquardt, FitError, LmFit, LmOptions};
pub use modes::{build_mode_table, fsr_to_length, DetectionParams, ModeEntry, ModeTable};
pub use peaks::{detect_peaks, detect_peaks_in, PeakCandidate};
