//! Mode-table assembly: per-mode Lorentzian fits, FSR and finesse.

use super::lineshape::{fit_lorentzian_values, lorentzian_guess, LorentzianFit};
use super::lm::FitError;
use super::peaks::detect_peaks;
use crate::spectrum::{AxisKind, Spectrum};
use crate::units::{EffectiveIndex, Length, RateHz, C_VACUUM};
use serde::{Deserialize, Serialize};

/// Detection and fit-acceptance settings for [`build_mode_table`].
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DetectionParams {
    pub min_prominence: f64,
    pub min_spacing_hz: f64,
    /// Reflection fits with a worse residual RMS are rejected: the two-sided
    /// cavity reflection magnitude is not exactly Lorentzian away from the
    /// symmetric point, so a mismatch gate keeps only trustworthy dip fits.
    pub reflection_residual_gate: f64,
}

impl Default for DetectionParams {
    fn default() -> Self {
        Self {
            min_prominence: 0.05,
            min_spacing_hz: 0.0,
            reflection_residual_gate: 0.02,
        }
    }
}

/// One fitted cavity mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeEntry {
    pub transmission_fit: LorentzianFit,
    pub reflection_fit: Option<LorentzianFit>,
    /// `fsr / fwhm`, present once an FSR is known.
    pub finesse: Option<f64>,
    /// On-resonance transmission, baseline-inclusive (`baseline + amplitude`).
    pub t0: f64,
    /// On-resonance transmission with the fitted baseline removed.
    pub t0_above_baseline: f64,
    /// On-resonance reflection (dip floor), baseline-inclusive.
    pub r0: Option<f64>,
}

impl ModeEntry {
    pub fn center_hz(&self) -> f64 {
        self.transmission_fit.center
    }

    pub fn fwhm(&self) -> RateHz {
        RateHz::from_hz(self.transmission_fit.fwhm)
    }
}

/// Ordered table of fitted modes with the FSR estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeTable {
    pub modes: Vec<ModeEntry>,
    /// Median of adjacent mode spacings; absent with fewer than 2 modes.
    pub fsr: Option<RateHz>,
    /// Median absolute deviation of the adjacent spacings.
    pub fsr_mad: Option<RateHz>,
    pub warnings: Vec<String>,
}

/// Half-width of the fit window in units of the estimated FWHM. The far
/// wings of a Lorentzian carry no line information but do import the tails
/// of neighboring modes, which biases the width fit; a bounded window keeps
/// the comb fits exact.
const FIT_WINDOW_HALF_WIDTHS: f64 = 10.0;

fn clip_fit_window(
    axis: &[f64],
    values: &[f64],
    (lo, hi): (usize, usize),
    peak_idx: usize,
) -> (usize, usize) {
    let guess = lorentzian_guess(&axis[lo..hi], &values[lo..hi]);
    let half_span = FIT_WINDOW_HALF_WIDTHS * guess[1];
    if half_span.is_nan() || half_span <= 0.0 {
        return (lo, hi);
    }
    let center = axis[peak_idx];
    let new_lo = lo + axis[lo..hi].partition_point(|&x| x < center - half_span);
    let new_hi = lo + axis[lo..hi].partition_point(|&x| x <= center + half_span);
    // keep enough samples for the 4-parameter fit
    if new_hi.saturating_sub(new_lo) < 12 {
        (lo, hi)
    } else {
        (new_lo, new_hi)
    }
}

fn median(sorted: &mut [f64]) -> f64 {
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Detects and fits every transmission peak of a frequency-axis spectrum,
/// pairs each with the co-located reflection dip when a reflection column is
/// present, and estimates the FSR as the median adjacent spacing (median
/// absolute deviation as its uncertainty).
///
/// Fewer than 2 usable modes is not an error: the FSR is absent and a
/// warning is recorded.
pub fn build_mode_table(
    spec: &Spectrum,
    params: &DetectionParams,
) -> Result<ModeTable, FitError> {
    if spec.axis_kind() != AxisKind::FrequencyHz {
        return Err(FitError::MissingInput(
            "frequency axis (convert wavelength spectra with Spectrum::to_frequency)",
        ));
    }
    let transmission = spec
        .transmission()
        .ok_or(FitError::MissingInput("transmission column"))?;
    let peaks = detect_peaks(spec, params.min_prominence, params.min_spacing_hz)?;

    let mut warnings = Vec::new();
    let mut modes: Vec<ModeEntry> = Vec::new();
    for peak in &peaks {
        let (lo, hi) = clip_fit_window(spec.axis(), transmission, peak.window, peak.index);
        let axis = &spec.axis()[lo..hi];
        let t_vals = &transmission[lo..hi];
        let t_fit = match fit_lorentzian_values(axis, t_vals, None) {
            Ok(f) => f,
            Err(e) => {
                warnings.push(format!(
                    "mode near {:.6e} Hz skipped: {e}",
                    peak.location
                ));
                continue;
            }
        };
        if !t_fit.converged {
            warnings.push(format!(
                "mode near {:.6e} Hz: fit did not converge",
                peak.location
            ));
        }

        let reflection_fit = spec.reflection().and_then(|r_col| {
            let r_vals = &r_col[lo..hi];
            // seed the dip from the transmission fit; reuse the self-seeded
            // baseline/amplitude for the reflection column
            let self_seed = lorentzian_guess(axis, r_vals);
            let guess = [t_fit.center, t_fit.fwhm, self_seed[2], self_seed[3]];
            match fit_lorentzian_values(axis, r_vals, Some(guess)) {
                Ok(f) if f.converged && f.amplitude < 0.0 => {
                    if f.residual_rms < params.reflection_residual_gate {
                        Some(f)
                    } else {
                        warnings.push(format!(
                            "reflection dip near {:.6e} Hz rejected: residual rms {:.3e} above gate",
                            t_fit.center, f.residual_rms
                        ));
                        None
                    }
                }
                Ok(_) => {
                    warnings.push(format!(
                        "reflection dip near {:.6e} Hz rejected: not a converged dip",
                        t_fit.center
                    ));
                    None
                }
                Err(e) => {
                    warnings.push(format!(
                        "reflection fit near {:.6e} Hz failed: {e}",
                        t_fit.center
                    ));
                    None
                }
            }
        });

        let r0 = reflection_fit.as_ref().map(|f| f.peak_value());
        modes.push(ModeEntry {
            t0: t_fit.peak_value(),
            t0_above_baseline: t_fit.amplitude,
            r0,
            reflection_fit,
            finesse: None,
            transmission_fit: t_fit,
        });
    }

    // fits may move centers; keep the table ordered by fitted center
    modes.sort_by(|a, b| a.center_hz().partial_cmp(&b.center_hz()).unwrap());

    let converged_centers: Vec<f64> = modes
        .iter()
        .filter(|m| m.transmission_fit.converged)
        .map(|m| m.center_hz())
        .collect();
    let (fsr, fsr_mad) = if converged_centers.len() >= 2 {
        let mut spacings: Vec<f64> = converged_centers.windows(2).map(|w| w[1] - w[0]).collect();
        let med = median(&mut spacings);
        let mut deviations: Vec<f64> = spacings.iter().map(|s| (s - med).abs()).collect();
        let mad = median(&mut deviations);
        (Some(RateHz::from_hz(med)), Some(RateHz::from_hz(mad)))
    } else {
        warnings.push("fewer than 2 modes: FSR unavailable".to_string());
        (None, None)
    };

    if let Some(fsr) = fsr {
        for mode in &mut modes {
            mode.finesse = Some(fsr.hz() / mode.transmission_fit.fwhm);
        }
        let max_fwhm = modes
            .iter()
            .map(|m| m.transmission_fit.fwhm)
            .fold(0.0f64, f64::max);
        if fsr.hz() <= max_fwhm {
            warnings.push(format!(
                "modes not resolved: FSR {:.3e} Hz below widest FWHM {:.3e} Hz",
                fsr.hz(),
                max_fwhm
            ));
        }
    }

    Ok(ModeTable {
        modes,
        fsr,
        fsr_mad,
        warnings,
    })
}

/// Geometric cavity length from the FSR: `l = c / (2 n_eff fsr)`.
pub fn fsr_to_length(fsr: RateHz, n_eff: EffectiveIndex) -> Result<Length, FitError> {
    if fsr.hz() <= 0.0 {
        return Err(FitError::Degenerate("fsr must be positive"));
    }
    Ok(Length::from_m(C_VACUUM / (2.0 * n_eff.value() * fsr.hz())))
}
