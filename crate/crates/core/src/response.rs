//! Analytic two-sided lossy cavity input-output model.
//!
//! The field amplitudes of a two-sided cavity with mirror coupling rates
//! `kappa1`, `kappa2`, intra-cavity loss rate `kappa_s` and detuning `d` are
//!
//! ```text
//! t = sqrt(kappa1 kappa2) / (kappa/2 + i d)
//! r = (0.5 (kappa1 - kappa2 - kappa_s) - i d) / (kappa/2 + i d)
//! ```
//!
//! with total linewidth `kappa = kappa1 + kappa2 + kappa_s`. All rates enter
//! as ratios, so any consistent unit works; this module keeps them in Hz.
//!
//! For a symmetric cavity (`kappa1 = kappa2 = kappa_c`) the on-resonance
//! power transmission and reflection reduce to
//! `T0 = (1 - kappa_s/kappa)^2` and `R0 = (kappa_s/kappa)^2`, which is the
//! relation used to extract `kappa_s` from a set of fitted modes.

use crate::units::RateHz;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ResponseError {
    #[error("total linewidth kappa1 + kappa2 must be positive")]
    ZeroLinewidth,
    #[error("loss extraction needs at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error("point {index}: power {value} outside [0, 1.05]")]
    PowerOutOfRange { index: usize, value: f64 },
    #[error("point {0}: kappa must be positive")]
    NonPositiveKappa(usize),
    #[error("point {0}: weight must be positive and finite")]
    BadWeight(usize),
    #[error("one-pass model invalid: kappa_s = {kappa_s_hz} Hz >= fsr/pi = {limit_hz} Hz")]
    LossTooLarge { kappa_s_hz: f64, limit_hz: f64 },
}

/// Parameter set of the two-sided cavity model.
///
/// `detuning_hz` is the signed laser-cavity detuning in ordinary frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavityResponseParams {
    pub kappa1: RateHz,
    pub kappa2: RateHz,
    pub kappa_s: RateHz,
    pub detuning_hz: f64,
}

impl CavityResponseParams {
    pub fn new(
        kappa1: RateHz,
        kappa2: RateHz,
        kappa_s: RateHz,
        detuning_hz: f64,
    ) -> Result<Self, ResponseError> {
        if kappa1.hz() + kappa2.hz() <= 0.0 {
            return Err(ResponseError::ZeroLinewidth);
        }
        Ok(Self {
            kappa1,
            kappa2,
            kappa_s,
            detuning_hz,
        })
    }

    /// Symmetric cavity (`kappa1 = kappa2 = kappa_c`).
    pub fn symmetric(kappa_c: RateHz, kappa_s: RateHz, detuning_hz: f64) -> Result<Self, ResponseError> {
        Self::new(kappa_c, kappa_c, kappa_s, detuning_hz)
    }

    /// Total linewidth `kappa = kappa1 + kappa2 + kappa_s`.
    pub fn total_linewidth(&self) -> RateHz {
        RateHz::from_hz(self.kappa1.hz() + self.kappa2.hz() + self.kappa_s.hz())
    }
}

/// Complex field transmission and reflection amplitudes of the bare cavity.
pub fn cavity_amplitudes(p: &CavityResponseParams) -> (Complex64, Complex64) {
    let k1 = p.kappa1.hz();
    let k2 = p.kappa2.hz();
    let ks = p.kappa_s.hz();
    let kappa = k1 + k2 + ks;
    let denom = Complex64::new(kappa / 2.0, p.detuning_hz);
    let t = Complex64::new((k1 * k2).sqrt(), 0.0) / denom;
    let r = Complex64::new(0.5 * (k1 - k2 - ks), -p.detuning_hz) / denom;
    (t, r)
}

/// On-resonance power transmission and reflection of a symmetric cavity.
///
/// With `kappa = 2 kappa_c + kappa_s`:
/// `T0 = (2 kappa_c / kappa)^2`, `R0 = (kappa_s / kappa)^2`.
pub fn on_resonance_tr(kappa_c: RateHz, kappa_s: RateHz) -> Result<(f64, f64), ResponseError> {
    let kc = kappa_c.hz();
    let ks = kappa_s.hz();
    let kappa = 2.0 * kc + ks;
    if kappa <= 0.0 {
        return Err(ResponseError::ZeroLinewidth);
    }
    let t0 = (2.0 * kc / kappa).powi(2);
    let r0 = (ks / kappa).powi(2);
    Ok((t0, r0))
}

/// One measured mode for the loss extraction: total linewidth plus
/// on-resonance transmission/reflection, with optional residual weights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossPoint {
    pub kappa: RateHz,
    pub t0: f64,
    pub r0: f64,
    pub weight_t: f64,
    pub weight_r: f64,
}

impl LossPoint {
    pub fn new(kappa: RateHz, t0: f64, r0: f64) -> Self {
        Self {
            kappa,
            t0,
            r0,
            weight_t: 1.0,
            weight_r: 1.0,
        }
    }

    pub fn weighted(kappa: RateHz, t0: f64, r0: f64, weight_t: f64, weight_r: f64) -> Self {
        Self {
            kappa,
            t0,
            r0,
            weight_t,
            weight_r,
        }
    }
}

/// Where the fitted `kappa_s` landed relative to its feasible interval
/// `[0, min kappa]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LossBoundary {
    Interior,
    AtZero,
    AtUpperBound,
}

/// Result of the joint `kappa_s` fit over a set of `(kappa, T0, R0)` points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossBudget {
    /// Fitted intra-cavity loss rate.
    pub kappa_s: RateHz,
    /// Curvature-based 1-sigma uncertainty, absent when the cost is flat.
    pub kappa_s_sigma: Option<RateHz>,
    /// Symmetric per-mirror coupling `(kappa_i - kappa_s)/2` at each point.
    pub kappa_c: Vec<RateHz>,
    /// Per-point diagnostic `kappa_s,i = kappa_i * sqrt(R0_i)`.
    pub per_point_kappa_s: Vec<RateHz>,
    /// Linewidth where `T0 = R0`; identically `2 kappa_s`.
    pub crossing_kappa: RateHz,
    /// One-pass intra-cavity transmission; filled once an FSR is known.
    pub one_pass_transmission: Option<f64>,
    pub boundary: LossBoundary,
    pub residual_rms: f64,
    pub converged: bool,
}

fn residuals_at(points: &[LossPoint], x: f64) -> f64 {
    let mut cost = 0.0;
    for p in points {
        let k = p.kappa.hz();
        let rt = p.t0 - (1.0 - x / k).powi(2);
        let rr = p.r0 - (x / k).powi(2);
        cost += p.weight_t * rt * rt + p.weight_r * rr * rr;
    }
    cost
}

/// First and second derivative of the cost at `x` (analytic; the cost is a
/// quartic polynomial in `x`).
fn cost_derivatives(points: &[LossPoint], x: f64) -> (f64, f64) {
    let mut d1 = 0.0;
    let mut d2 = 0.0;
    for p in points {
        let k = p.kappa.hz();
        let rt = p.t0 - (1.0 - x / k).powi(2);
        let drt = 2.0 * (1.0 - x / k) / k;
        let ddrt = -2.0 / (k * k);
        let rr = p.r0 - (x / k).powi(2);
        let drr = -2.0 * x / (k * k);
        let ddrr = -2.0 / (k * k);
        d1 += 2.0 * (p.weight_t * rt * drt + p.weight_r * rr * drr);
        d2 += 2.0 * p.weight_t * (drt * drt + rt * ddrt) + 2.0 * p.weight_r * (drr * drr + rr * ddrr);
    }
    (d1, d2)
}

/// Joint weighted least-squares extraction of the intra-cavity loss rate
/// from a set of `(kappa, T0, R0)` modes, assuming a symmetric cavity.
///
/// Minimizes the summed squared residual of both the `T0` and `R0` relations
/// over the single scalar `kappa_s in [0, min kappa]`. A grid scan seeds a
/// golden-section refinement, so the result is deterministic for identical
/// input. The 1-sigma uncertainty comes from the cost curvature at the
/// minimum.
///
/// The symmetric-cavity assumption biases the result when the two gratings
/// couple unequally; the asymmetric amplitude model in [`cavity_amplitudes`]
/// remains available for forward checks.
pub fn extract_loss_rate(points: &[LossPoint]) -> Result<LossBudget, ResponseError> {
    if points.len() < 2 {
        return Err(ResponseError::TooFewPoints(points.len()));
    }
    for (i, p) in points.iter().enumerate() {
        if p.kappa.hz() <= 0.0 {
            return Err(ResponseError::NonPositiveKappa(i));
        }
        for v in [p.t0, p.r0] {
            if !v.is_finite() || !(0.0..=1.05).contains(&v) {
                return Err(ResponseError::PowerOutOfRange { index: i, value: v });
            }
        }
        for w in [p.weight_t, p.weight_r] {
            if !w.is_finite() || w <= 0.0 {
                return Err(ResponseError::BadWeight(i));
            }
        }
    }

    let upper = points
        .iter()
        .map(|p| p.kappa.hz())
        .fold(f64::INFINITY, f64::min);

    // Grid scan seeds the bracket; the cost is quartic so a few hundred
    // samples cannot miss the global minimum basin.
    const GRID: usize = 512;
    let mut best_i = 0;
    let mut best_c = f64::INFINITY;
    for i in 0..=GRID {
        let x = upper * i as f64 / GRID as f64;
        let c = residuals_at(points, x);
        if c < best_c {
            best_c = c;
            best_i = i;
        }
    }
    let mut lo = upper * best_i.saturating_sub(1) as f64 / GRID as f64;
    let mut hi = upper * (best_i + 1).min(GRID) as f64 / GRID as f64;

    // Golden-section refinement.
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut a = hi - INV_PHI * (hi - lo);
    let mut b = lo + INV_PHI * (hi - lo);
    let mut fa = residuals_at(points, a);
    let mut fb = residuals_at(points, b);
    for _ in 0..120 {
        if hi - lo <= upper * 1e-14 {
            break;
        }
        if fa <= fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - INV_PHI * (hi - lo);
            fa = residuals_at(points, a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + INV_PHI * (hi - lo);
            fb = residuals_at(points, b);
        }
    }
    let kappa_s_hat = 0.5 * (lo + hi);
    let cost = residuals_at(points, kappa_s_hat);

    let boundary = if kappa_s_hat <= upper * 1e-9 {
        LossBoundary::AtZero
    } else if kappa_s_hat >= upper * (1.0 - 1e-9) {
        LossBoundary::AtUpperBound
    } else {
        LossBoundary::Interior
    };
    let kappa_s_hat = match boundary {
        LossBoundary::AtZero => 0.0,
        LossBoundary::AtUpperBound => upper,
        LossBoundary::Interior => kappa_s_hat,
    };

    let (_, d2) = cost_derivatives(points, kappa_s_hat);
    let n_res = 2 * points.len();
    let dof = (n_res - 1).max(1) as f64;
    let kappa_s_sigma = if d2 > 0.0 {
        Some(RateHz::from_hz((2.0 * cost / (dof * d2)).sqrt()))
    } else {
        None
    };

    let weight_sum: f64 = points.iter().map(|p| p.weight_t + p.weight_r).sum();
    let residual_rms = (cost / weight_sum).sqrt();

    // Flag a degenerate fit: all kappa identical gives the model a single
    // degree of freedom, so any leftover residual means inconsistent data.
    let kappas: Vec<f64> = points.iter().map(|p| p.kappa.hz()).collect();
    let all_equal = kappas
        .iter()
        .all(|&k| (k - kappas[0]).abs() <= 1e-12 * kappas[0]);
    let converged = !(all_equal && residual_rms > 0.05);

    let kappa_c = points
        .iter()
        .map(|p| RateHz::from_hz(((p.kappa.hz() - kappa_s_hat) / 2.0).max(0.0)))
        .collect();
    let per_point_kappa_s = points
        .iter()
        .map(|p| RateHz::from_hz(p.kappa.hz() * p.r0.max(0.0).sqrt()))
        .collect();

    Ok(LossBudget {
        kappa_s: RateHz::from_hz(kappa_s_hat),
        kappa_s_sigma,
        kappa_c,
        per_point_kappa_s,
        crossing_kappa: RateHz::from_hz(2.0 * kappa_s_hat),
        one_pass_transmission: None,
        boundary,
        residual_rms,
        converged,
    })
}

/// One-pass intra-cavity power transmission from the loss rate and FSR.
///
/// Convention: the round-trip fractional power loss is
/// `delta_rt = 2 pi kappa_s / fsr` (from the finesse-loss relation
/// `F_loss = 2 pi / delta_rt` with `F_loss = fsr / kappa_s`), and one pass
/// carries half of it, giving `1 - pi kappa_s / fsr`. This is the linearized
/// high-finesse form, valid for `kappa_s < fsr / pi`.
pub fn one_pass_transmission(kappa_s: RateHz, fsr: RateHz) -> Result<f64, ResponseError> {
    let limit = fsr.hz() / std::f64::consts::PI;
    if kappa_s.hz() >= limit {
        return Err(ResponseError::LossTooLarge {
            kappa_s_hz: kappa_s.hz(),
            limit_hz: limit,
        });
    }
    Ok(1.0 - std::f64::consts::PI * kappa_s.hz() / fsr.hz())
}

/// Propagated 1-sigma band of the one-pass transmission for an uncertain
/// `kappa_s` (the map is linear in `kappa_s`).
pub fn one_pass_transmission_sigma(kappa_s_sigma: RateHz, fsr: RateHz) -> f64 {
    std::f64::consts::PI * kappa_s_sigma.hz() / fsr.hz()
}

/// Bootstrap resampling estimate of the `kappa_s` 1-sigma spread; opt-in
/// companion to the curvature-based uncertainty for noisy data.
///
/// Resamples the point set with replacement `trials` times using a
/// deterministic splitmix64 stream seeded by `seed`.
pub fn bootstrap_kappa_s_sigma(
    points: &[LossPoint],
    trials: usize,
    seed: u64,
) -> Result<Option<RateHz>, ResponseError> {
    if points.len() < 2 {
        return Err(ResponseError::TooFewPoints(points.len()));
    }
    let mut state = seed;
    let mut next = move || {
        // splitmix64
        state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    };
    let mut estimates = Vec::with_capacity(trials);
    for _ in 0..trials {
        let resample: Vec<LossPoint> = (0..points.len())
            .map(|_| points[(next() % points.len() as u64) as usize])
            .collect();
        if let Ok(budget) = extract_loss_rate(&resample) {
            estimates.push(budget.kappa_s.hz());
        }
    }
    if estimates.len() < 2 {
        return Ok(None);
    }
    let mean = estimates.iter().sum::<f64>() / estimates.len() as f64;
    let var = estimates.iter().map(|e| (e - mean).powi(2)).sum::<f64>()
        / (estimates.len() - 1) as f64;
    Ok(Some(RateHz::from_hz(var.sqrt())))
}
