//! Domain newtypes and unit conventions.
//!
//! Every stored rate (linewidths, coupling/loss rates, free spectral ranges)
//! is an ordinary frequency in Hz. Angular-rate formulas are evaluated through
//! [`angular`], so `finesse = fsr / kappa` holds with both quantities in Hz.

use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use thiserror::Error;

/// Speed of light in vacuum, m/s (exact).
pub const C_VACUUM: f64 = 299_792_458.0;

#[derive(Debug, Error, PartialEq)]
pub enum UnitError {
    #[error("rate must be finite and non-negative, got {0}")]
    InvalidRate(f64),
    #[error("length must be finite and positive, got {0} m")]
    InvalidLength(f64),
    #[error("effective index {value} outside ({lo}, {hi})")]
    IndexOutOfBounds { value: f64, lo: f64, hi: f64 },
}

/// An ordinary-frequency rate in Hz (linewidth, coupling rate, FSR, ...).
///
/// Non-negative by construction; use plain `f64` for signed detunings.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RateHz(f64);

impl RateHz {
    pub fn new(hz: f64) -> Result<Self, UnitError> {
        if !hz.is_finite() || hz < 0.0 {
            return Err(UnitError::InvalidRate(hz));
        }
        Ok(Self(hz))
    }

    /// Convenience constructor for values known to be valid (panics otherwise).
    pub fn from_hz(hz: f64) -> Self {
        Self::new(hz).expect("valid rate")
    }

    pub fn from_mhz(mhz: f64) -> Self {
        Self::from_hz(mhz * 1e6)
    }

    pub fn from_ghz(ghz: f64) -> Self {
        Self::from_hz(ghz * 1e9)
    }

    pub fn hz(self) -> f64 {
        self.0
    }

    pub fn mhz(self) -> f64 {
        self.0 / 1e6
    }

    pub fn ghz(self) -> f64 {
        self.0 / 1e9
    }
}

/// A physical length in meters, finite and positive.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Length(f64);

impl Length {
    pub fn new(meters: f64) -> Result<Self, UnitError> {
        if !meters.is_finite() || meters <= 0.0 {
            return Err(UnitError::InvalidLength(meters));
        }
        Ok(Self(meters))
    }

    pub fn from_m(meters: f64) -> Self {
        Self::new(meters).expect("valid length")
    }

    pub fn from_mm(mm: f64) -> Self {
        Self::from_m(mm * 1e-3)
    }

    pub fn from_nm(nm: f64) -> Self {
        Self::from_m(nm * 1e-9)
    }

    pub fn meters(self) -> f64 {
        self.0
    }
}

/// Default validity bounds for the guided-mode effective index of a silica
/// nanofiber.
pub const N_EFF_DEFAULT_BOUNDS: (f64, f64) = (1.0, 1.5);

/// Effective refractive index of the nanofiber guided mode (~1.2).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EffectiveIndex(f64);

impl EffectiveIndex {
    /// Validates against the default nanofiber bounds (1.0, 1.5).
    pub fn new(value: f64) -> Result<Self, UnitError> {
        Self::with_bounds(value, N_EFF_DEFAULT_BOUNDS)
    }

    /// Validates against caller-supplied exclusive bounds.
    pub fn with_bounds(value: f64, (lo, hi): (f64, f64)) -> Result<Self, UnitError> {
        if !value.is_finite() || value <= lo || value >= hi {
            return Err(UnitError::IndexOutOfBounds { value, lo, hi });
        }
        Ok(Self(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Ordinary frequency -> angular rate, `2 pi * rate` in rad/s.
///
/// The unit bridge between quoted MHz linewidths and angular-rate formulas.
pub fn angular(rate: RateHz) -> f64 {
    TAU * rate.hz()
}

/// Optical cavity length `L = n_eff * l` from the geometric length `l`.
pub fn optical_length(l: Length, n_eff: EffectiveIndex) -> Length {
    Length::from_m(l.meters() * n_eff.value())
}

/// Vacuum wavelength -> frequency (and back; the map is an involution).
pub fn wavelength_to_frequency(wavelength_m: f64) -> f64 {
    C_VACUUM / wavelength_m
}
