//! Validated container for sampled transmission/reflection spectra.

use crate::units::{wavelength_to_frequency, C_VACUUM};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Powers are normalized to off-stopband throughput; values slightly above 1
/// are tolerated to admit measurement noise, rejected beyond this ceiling.
pub const MAX_NORMALIZED_POWER: f64 = 1.05;

#[derive(Debug, Error, PartialEq)]
pub enum SpectrumError {
    #[error("spectrum needs at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("axis must be strictly increasing (violation at index {0})")]
    NonMonotonicAxis(usize),
    #[error("axis value at index {0} is not finite")]
    NonFiniteAxis(usize),
    #[error("power {value} at index {index} outside [0, {max}]", max = MAX_NORMALIZED_POWER)]
    PowerOutOfRange { index: usize, value: f64 },
    #[error("power column length {got} does not match axis length {axis}")]
    LengthMismatch { axis: usize, got: usize },
    #[error("spectrum carries neither a transmission nor a reflection column")]
    NoPowerColumn,
    #[error("operation requires a {0} axis")]
    WrongAxisKind(&'static str),
    #[error("operation requires a {0} column")]
    MissingColumn(&'static str),
}

/// Physical meaning of the sample axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AxisKind {
    #[serde(rename = "frequency_Hz")]
    FrequencyHz,
    #[serde(rename = "wavelength_m")]
    WavelengthM,
}

impl AxisKind {
    pub fn label(self) -> &'static str {
        match self {
            AxisKind::FrequencyHz => "frequency_Hz",
            AxisKind::WavelengthM => "wavelength_m",
        }
    }
}

/// A sampled optical spectrum: strictly increasing axis plus normalized
/// transmitted and/or reflected power columns.
///
/// Immutable after construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    axis_kind: AxisKind,
    axis: Vec<f64>,
    transmission: Option<Vec<f64>>,
    reflection: Option<Vec<f64>>,
}

impl Spectrum {
    pub fn new(
        axis_kind: AxisKind,
        axis: Vec<f64>,
        transmission: Option<Vec<f64>>,
        reflection: Option<Vec<f64>>,
    ) -> Result<Self, SpectrumError> {
        if axis.len() < 2 {
            return Err(SpectrumError::TooFewSamples(axis.len()));
        }
        for (i, &x) in axis.iter().enumerate() {
            if !x.is_finite() {
                return Err(SpectrumError::NonFiniteAxis(i));
            }
            if i > 0 && x <= axis[i - 1] {
                return Err(SpectrumError::NonMonotonicAxis(i));
            }
        }
        if transmission.is_none() && reflection.is_none() {
            return Err(SpectrumError::NoPowerColumn);
        }
        for col in [&transmission, &reflection].into_iter().flatten() {
            if col.len() != axis.len() {
                return Err(SpectrumError::LengthMismatch {
                    axis: axis.len(),
                    got: col.len(),
                });
            }
            for (i, &p) in col.iter().enumerate() {
                if !p.is_finite() || !(0.0..=MAX_NORMALIZED_POWER).contains(&p) {
                    return Err(SpectrumError::PowerOutOfRange { index: i, value: p });
                }
            }
        }
        Ok(Self {
            axis_kind,
            axis,
            transmission,
            reflection,
        })
    }

    pub fn axis_kind(&self) -> AxisKind {
        self.axis_kind
    }

    pub fn len(&self) -> usize {
        self.axis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.axis.is_empty()
    }

    pub fn axis(&self) -> &[f64] {
        &self.axis
    }

    pub fn transmission(&self) -> Option<&[f64]> {
        self.transmission.as_deref()
    }

    pub fn reflection(&self) -> Option<&[f64]> {
        self.reflection.as_deref()
    }

    /// Axis span `(first, last)`.
    pub fn span(&self) -> (f64, f64) {
        (self.axis[0], *self.axis.last().unwrap())
    }

    /// Sub-spectrum over the index range `[lo, hi)`, preserving columns.
    pub fn slice(&self, lo: usize, hi: usize) -> Result<Spectrum, SpectrumError> {
        let hi = hi.min(self.len());
        if hi.saturating_sub(lo) < 2 {
            return Err(SpectrumError::TooFewSamples(hi.saturating_sub(lo)));
        }
        Ok(Spectrum {
            axis_kind: self.axis_kind,
            axis: self.axis[lo..hi].to_vec(),
            transmission: self.transmission.as_ref().map(|t| t[lo..hi].to_vec()),
            reflection: self.reflection.as_ref().map(|r| r[lo..hi].to_vec()),
        })
    }

    /// Converts a wavelength-axis spectrum to a frequency axis (nu = c/lambda),
    /// reversing sample order so the axis stays strictly increasing.
    /// Frequency-axis input is returned unchanged.
    pub fn to_frequency(&self) -> Spectrum {
        match self.axis_kind {
            AxisKind::FrequencyHz => self.clone(),
            AxisKind::WavelengthM => {
                let axis: Vec<f64> = self
                    .axis
                    .iter()
                    .rev()
                    .map(|&l| wavelength_to_frequency(l))
                    .collect();
                let rev = |col: &Option<Vec<f64>>| {
                    col.as_ref()
                        .map(|c| c.iter().rev().copied().collect::<Vec<f64>>())
                };
                Spectrum {
                    axis_kind: AxisKind::FrequencyHz,
                    axis,
                    transmission: rev(&self.transmission),
                    reflection: rev(&self.reflection),
                }
            }
        }
    }

    /// Merges the reflection column of `other` into a copy of `self`.
    /// Axes must agree exactly (same kind and sample positions).
    pub fn with_reflection_from(&self, other: &Spectrum) -> Result<Spectrum, SpectrumError> {
        if other.axis_kind != self.axis_kind {
            return Err(SpectrumError::WrongAxisKind(self.axis_kind.label()));
        }
        if other.axis != self.axis {
            return Err(SpectrumError::LengthMismatch {
                axis: self.axis.len(),
                got: other.axis.len(),
            });
        }
        let refl = other
            .reflection
            .clone()
            .or_else(|| other.transmission.clone())
            .ok_or(SpectrumError::NoPowerColumn)?;
        Ok(Spectrum {
            axis_kind: self.axis_kind,
            axis: self.axis.clone(),
            transmission: self.transmission.clone(),
            reflection: Some(refl),
        })
    }
}

/// Frequency spacing equivalent of a wavelength interval around `lambda`:
/// `|d nu| = c * d lambda / lambda^2`.
pub fn wavelength_interval_to_frequency(lambda_m: f64, dlambda_m: f64) -> f64 {
    C_VACUUM * dlambda_m / (lambda_m * lambda_m)
}
