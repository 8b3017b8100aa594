//! Lorentzian and Gaussian line-shape fits.

use super::lm::{levenberg_marquardt, FitError, LmFit, LmOptions};
use crate::spectrum::Spectrum;
use serde::{Deserialize, Serialize};

/// Fitted Lorentzian `y = baseline + amplitude (G/2)^2 / ((x-c)^2 + (G/2)^2)`.
///
/// `center` and `fwhm` are in the axis units of the fitted window; a dip
/// (reflection resonance) fits with negative amplitude. Parameter order in
/// `covariance` is `[center, fwhm, amplitude, baseline]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LorentzianFit {
    pub center: f64,
    pub fwhm: f64,
    pub amplitude: f64,
    pub baseline: f64,
    pub covariance: Option<Vec<Vec<f64>>>,
    pub residual_rms: f64,
    pub converged: bool,
    #[serde(skip)]
    pub cost_trace: Vec<f64>,
}

impl LorentzianFit {
    /// Height of the line at its center (baseline-inclusive).
    pub fn peak_value(&self) -> f64 {
        self.baseline + self.amplitude
    }

    /// 1-sigma uncertainty of the FWHM, when the covariance is available.
    pub fn fwhm_sigma(&self) -> Option<f64> {
        self.covariance
            .as_ref()
            .map(|c| c[1][1].max(0.0).sqrt())
    }

    pub fn eval(&self, x: f64) -> f64 {
        lorentzian_model(x, &[self.center, self.fwhm, self.amplitude, self.baseline])
    }
}

/// Fitted Gaussian envelope
/// `d = baseline + peak exp(-8 (z-c)^2 / w^2)` with `w` the 1/e^2 full width.
///
/// Used for crater-depth profiles, so all parameters are lengths in meters.
/// Covariance order is `[center, width_1e2, peak, baseline]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianFit {
    pub center: f64,
    pub peak: f64,
    pub width_1e2: f64,
    pub baseline: f64,
    pub covariance: Option<Vec<Vec<f64>>>,
    pub residual_rms: f64,
    pub converged: bool,
    #[serde(skip)]
    pub cost_trace: Vec<f64>,
}

pub(crate) fn lorentzian_model(x: f64, p: &[f64]) -> f64 {
    let h = p[1] / 2.0;
    let u = x - p[0];
    p[3] + p[2] * h * h / (u * u + h * h)
}

fn lorentzian_jacobian(x: f64, p: &[f64], row: &mut [f64]) {
    let h = p[1] / 2.0;
    let u = x - p[0];
    let d = u * u + h * h;
    let d2 = d * d;
    row[0] = p[2] * h * h * 2.0 * u / d2;
    row[1] = p[2] * h * u * u / d2;
    row[2] = h * h / d;
    row[3] = 1.0;
}

fn gaussian_model(z: f64, p: &[f64]) -> f64 {
    let u = z - p[0];
    p[3] + p[2] * (-8.0 * u * u / (p[1] * p[1])).exp()
}

fn gaussian_jacobian(z: f64, p: &[f64], row: &mut [f64]) {
    let u = z - p[0];
    let w2 = p[1] * p[1];
    let e = (-8.0 * u * u / w2).exp();
    row[0] = p[2] * e * 16.0 * u / w2;
    row[1] = p[2] * e * 16.0 * u * u / (w2 * p[1]);
    row[2] = e;
    row[3] = 1.0;
}

fn edge_median(values: &[f64]) -> f64 {
    let m = values.len();
    let mut edges = [values[0], values[1], values[m - 2], values[m - 1]];
    edges.sort_by(|a, b| a.partial_cmp(b).unwrap());
    0.5 * (edges[1] + edges[2])
}

/// Full width of the region where the deviation from `baseline` exceeds half
/// the extremum deviation, by linear interpolation outward from `peak_idx`.
fn half_level_width(axis: &[f64], values: &[f64], peak_idx: usize, baseline: f64) -> Option<f64> {
    let dev = values[peak_idx] - baseline;
    if dev == 0.0 {
        return None;
    }
    let half = baseline + dev / 2.0;
    let crossing = |mut i: usize, step: isize| -> Option<f64> {
        loop {
            let j = i as isize + step;
            if j < 0 || j as usize >= values.len() {
                return None;
            }
            let j = j as usize;
            let (a, b) = (values[i], values[j]);
            if (a - half) * (b - half) <= 0.0 && a != b {
                let f = (half - a) / (b - a);
                return Some(axis[i] + f * (axis[j] - axis[i]));
            }
            i = j;
        }
    };
    let left = crossing(peak_idx, -1)?;
    let right = crossing(peak_idx, 1)?;
    Some(right - left)
}

/// Self-seeded initial guess: center at the largest deviation from the
/// window-edge median, amplitude that deviation, width from the half-level
/// crossings. Handles both peaks and dips.
pub(crate) fn lorentzian_guess(axis: &[f64], values: &[f64]) -> [f64; 4] {
    let baseline = edge_median(values);
    let (idx, _) = values
        .iter()
        .enumerate()
        .max_by(|a, b| {
            (a.1 - baseline)
                .abs()
                .partial_cmp(&(b.1 - baseline).abs())
                .unwrap()
        })
        .unwrap();
    let amplitude = values[idx] - baseline;
    let span = axis[axis.len() - 1] - axis[0];
    let fwhm = half_level_width(axis, values, idx, baseline).unwrap_or(span / 4.0);
    [axis[idx], fwhm, amplitude, baseline]
}

fn window_precondition(axis: &[f64], fwhm_guess: f64) -> Result<(), FitError> {
    if axis.len() < 8 {
        return Err(FitError::TooFewSamples {
            got: axis.len(),
            need: 8,
        });
    }
    let span = axis[axis.len() - 1] - axis[0];
    let need = 2.0 * fwhm_guess;
    if span < need {
        return Err(FitError::WindowTooNarrow { span, need });
    }
    Ok(())
}

fn finish_lorentzian(fit: LmFit) -> LorentzianFit {
    LorentzianFit {
        center: fit.params[0],
        // the model is even in the width, so normalize its sign
        fwhm: fit.params[1].abs(),
        amplitude: fit.params[2],
        baseline: fit.params[3],
        covariance: fit.covariance,
        residual_rms: fit.residual_rms,
        converged: fit.converged,
        cost_trace: fit.cost_trace,
    }
}

/// Fits a Lorentzian to `values(axis)` within one peak window.
///
/// Damped least squares; accepted iterations strictly decrease the cost and
/// the iteration stops below a relative scaled step of 1e-8 or after 200
/// iterations, whichever comes first. Deterministic for identical input.
pub fn fit_lorentzian_values(
    axis: &[f64],
    values: &[f64],
    initial_guess: Option<[f64; 4]>,
) -> Result<LorentzianFit, FitError> {
    if axis.len() != values.len() {
        return Err(FitError::MismatchedLengths {
            axis: axis.len(),
            values: values.len(),
        });
    }
    if axis.len() < 8 {
        return Err(FitError::TooFewSamples {
            got: axis.len(),
            need: 8,
        });
    }
    let guess = initial_guess.unwrap_or_else(|| lorentzian_guess(axis, values));
    window_precondition(axis, guess[1])?;
    // center the axis so the offset of an optical-frequency axis (~1e14)
    // cannot swamp the scaled convergence test or the (x - c) subtraction
    let mid = 0.5 * (axis[0] + axis[axis.len() - 1]);
    let shifted: Vec<f64> = axis.iter().map(|x| x - mid).collect();
    let local_guess = [guess[0] - mid, guess[1], guess[2], guess[3]];
    let fit = levenberg_marquardt(
        &shifted,
        values,
        None,
        &local_guess,
        lorentzian_model,
        lorentzian_jacobian,
        &LmOptions::default(),
    )?;
    let mut out = finish_lorentzian(fit);
    out.center += mid;
    Ok(out)
}

/// [`fit_lorentzian_values`] on the transmission column of a spectrum window.
pub fn fit_lorentzian(
    window: &Spectrum,
    initial_guess: Option<[f64; 4]>,
) -> Result<LorentzianFit, FitError> {
    let values = window
        .transmission()
        .ok_or(FitError::MissingInput("transmission column"))?;
    fit_lorentzian_values(window.axis(), values, initial_guess)
}

/// Fits the Gaussian depth envelope to a sampled `(z, depth)` profile.
pub fn fit_gaussian_profile(profile: &[(f64, f64)]) -> Result<GaussianFit, FitError> {
    if profile.len() < 8 {
        return Err(FitError::TooFewSamples {
            got: profile.len(),
            need: 8,
        });
    }
    let (zs, ds): (Vec<f64>, Vec<f64>) = profile.iter().copied().unzip();
    if ds.iter().any(|d| !d.is_finite() || *d < 0.0) {
        return Err(FitError::NonFinite);
    }
    let lo = ds.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = ds.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if hi == lo {
        return Err(FitError::Degenerate("all depths equal"));
    }

    let peak_idx = ds
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .unwrap()
        .0;
    // half-max full width of a Gaussian is w sqrt(ln2 / 2); invert for the seed
    let span = zs[zs.len() - 1] - zs[0];
    let width = half_level_width(&zs, &ds, peak_idx, lo)
        .map(|hw| hw / (0.5f64.ln().abs() / 2.0).sqrt())
        .unwrap_or(span / 3.0);

    let mid = 0.5 * (zs[0] + zs[zs.len() - 1]);
    let shifted: Vec<f64> = zs.iter().map(|z| z - mid).collect();
    let guess = [zs[peak_idx] - mid, width, hi - lo, lo];

    let mut fit = levenberg_marquardt(
        &shifted,
        &ds,
        None,
        &guess,
        gaussian_model,
        gaussian_jacobian,
        &LmOptions::default(),
    )?;
    fit.params[0] += mid;
    Ok(GaussianFit {
        center: fit.params[0],
        width_1e2: fit.params[1].abs(),
        peak: fit.params[2],
        baseline: fit.params[3],
        covariance: fit.covariance,
        residual_rms: fit.residual_rms,
        converged: fit.converged,
        cost_trace: fit.cost_trace,
    })
}
