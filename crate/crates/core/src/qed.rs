//! Cavity-QED figures of merit: single-photon Rabi frequency, cooperativity
//! and coupling-regime classification.
//!
//! The formulas are `2 g0 = 2 sqrt(eta gamma c / L)` and `kappa = pi c/(F L)`
//! in angular rates; this module keeps every stored rate in ordinary
//! frequency and moves through the angular bridge internally, so
//! `kappa * F = c / (2 L)` holds in Hz. The cooperativity
//! `C = (2 g0)^2 / (kappa gamma0)` is a unit-consistent ratio and simplifies
//! to `(4 eta F / pi) (gamma / gamma0)`; both forms are reported.

use crate::units::{angular, Length, RateHz};
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum QedError {
    #[error("cooperativity undefined: {0} is zero")]
    UndefinedCooperativity(&'static str),
    #[error("finesse must be positive, got {0}")]
    NonPositiveFinesse(f64),
    #[error("invalid emitter: {0}")]
    InvalidEmitter(String),
}

/// Channeling efficiency for a Cs atom trapped 200 nm from the fiber
/// surface. Not a measured constant: obtained by inverting `C = 4 eta F / pi`
/// against the cooperativity band `C = 3..10` over the linewidth band
/// `kappa = 170..50 MHz` at a 10.36 GHz FSR (least-squares over the two band
/// anchors, scanned at 1e-4 resolution).
pub const DEFAULT_ETA_TRAPPED: f64 = 0.038;

/// Cs D2 natural linewidth (ordinary frequency). External literature value,
/// used only as a configurable preset default.
pub const CS_D2_GAMMA0_HZ: f64 = 5.2e6;

/// Enhancement of the channeling efficiency for solid-state emitters placed
/// directly on the fiber surface.
pub const SOLID_STATE_ETA_FACTOR: f64 = 5.0;

/// Default sanity bounds for `gamma / gamma0` near the nanofiber.
pub const GAMMA_RATIO_BOUNDS: (f64, f64) = (0.5, 5.0);

/// Spontaneous-emission parameters of the emitter coupled to the nanofiber.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmitterParams {
    /// Free-space spontaneous emission linewidth.
    pub gamma0: RateHz,
    /// Total emission rate near the nanofiber.
    pub gamma: RateHz,
    /// Channeling efficiency of spontaneous emission into the guided modes.
    pub eta: f64,
}

impl EmitterParams {
    pub fn new(gamma0: RateHz, gamma: RateHz, eta: f64) -> Result<Self, QedError> {
        Self::with_gamma_bounds(gamma0, gamma, eta, GAMMA_RATIO_BOUNDS)
    }

    pub fn with_gamma_bounds(
        gamma0: RateHz,
        gamma: RateHz,
        eta: f64,
        (lo, hi): (f64, f64),
    ) -> Result<Self, QedError> {
        if !(0.0..1.0).contains(&eta) {
            return Err(QedError::InvalidEmitter(format!(
                "eta must be in [0, 1), got {eta}"
            )));
        }
        if gamma0.hz() <= 0.0 {
            return Err(QedError::InvalidEmitter("gamma0 must be positive".into()));
        }
        let ratio = gamma.hz() / gamma0.hz();
        if ratio < lo || ratio > hi {
            return Err(QedError::InvalidEmitter(format!(
                "gamma/gamma0 = {ratio} outside [{lo}, {hi}]"
            )));
        }
        Ok(Self { gamma0, gamma, eta })
    }

    /// Cs atom trapped 200 nm from the fiber surface (gamma = gamma0,
    /// eta from the documented band inversion).
    pub fn cesium_trapped_200nm() -> Self {
        let gamma0 = RateHz::from_hz(CS_D2_GAMMA0_HZ);
        Self {
            gamma0,
            gamma: gamma0,
            eta: DEFAULT_ETA_TRAPPED,
        }
    }

    /// Solid-state emitter directly on the fiber surface: eta enhanced 5x.
    pub fn solid_state_on_surface() -> Self {
        let base = Self::cesium_trapped_200nm();
        Self {
            eta: base.eta * SOLID_STATE_ETA_FACTOR,
            ..base
        }
    }
}

/// Coupling regime of one cavity mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    StrongCoupling,
    Purcell,
    Weak,
}

/// Figures of merit for one cavity mode at a given finesse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QedPoint {
    pub finesse: f64,
    pub kappa: RateHz,
    /// Single-photon Rabi frequency `2 g0` (ordinary frequency).
    pub rabi_2g0: RateHz,
    /// Exact `(2 g0)^2 / (kappa gamma0)`.
    pub cooperativity: f64,
    /// Approximate `4 eta F / pi` (exact when gamma = gamma0).
    pub cooperativity_approx: f64,
    /// `gamma / gamma0`, the ratio separating the two cooperativity forms.
    pub gamma_ratio: f64,
    pub regime: Regime,
}

/// Single-photon Rabi frequency `2 g0 = 2 sqrt(eta gamma_ang c / L)`,
/// returned as an ordinary frequency.
pub fn rabi_frequency(e: &EmitterParams, l_optical: Length) -> RateHz {
    let gamma_ang = angular(e.gamma);
    let ang = 2.0 * (e.eta * gamma_ang * crate::units::C_VACUUM / l_optical.meters()).sqrt();
    RateHz::from_hz(ang / TAU)
}

/// Cavity linewidth at finesse `F` for optical length `L`:
/// angular `pi c / (F L)`, i.e. `c / (2 F L)` in ordinary frequency,
/// identically `fsr / F` with `fsr = c / (2 L)`.
pub fn cavity_linewidth(finesse: f64, l_optical: Length) -> Result<RateHz, QedError> {
    if finesse <= 0.0 {
        return Err(QedError::NonPositiveFinesse(finesse));
    }
    Ok(RateHz::from_hz(
        crate::units::C_VACUUM / (2.0 * finesse * l_optical.meters()),
    ))
}

/// Cooperativity in the `gamma ~ gamma0` approximation: `4 eta F / pi`.
pub fn cooperativity(e: &EmitterParams, finesse: f64) -> Result<f64, QedError> {
    if finesse <= 0.0 {
        return Err(QedError::NonPositiveFinesse(finesse));
    }
    Ok(4.0 * e.eta * finesse / PI)
}

/// Exact cooperativity `(2 g0)^2 / (kappa gamma0)`; the ratio is
/// unit-consistent, so ordinary frequencies go straight in.
pub fn cooperativity_exact(
    rabi_2g0: RateHz,
    kappa: RateHz,
    gamma0: RateHz,
) -> Result<f64, QedError> {
    if kappa.hz() == 0.0 {
        return Err(QedError::UndefinedCooperativity("kappa"));
    }
    if gamma0.hz() == 0.0 {
        return Err(QedError::UndefinedCooperativity("gamma0"));
    }
    Ok(rabi_2g0.hz().powi(2) / (kappa.hz() * gamma0.hz()))
}

/// Classifies the coupling regime.
///
/// Strong coupling: `2 g0 > kappa, gamma0`; Purcell: `kappa > 2 g0, gamma0`
/// with `C >= c_threshold`; weak otherwise. The `2 g0 = kappa` tie goes to
/// strong coupling (the strict inequality applies to the Purcell branch only).
pub fn classify_regime(
    rabi_2g0: RateHz,
    kappa: RateHz,
    gamma0: RateHz,
    c_threshold: f64,
) -> Result<Regime, QedError> {
    let c = cooperativity_exact(rabi_2g0, kappa, gamma0)?;
    let g = rabi_2g0.hz();
    if g >= kappa.hz() && g > gamma0.hz() {
        Ok(Regime::StrongCoupling)
    } else if kappa.hz() > g && kappa.hz() > gamma0.hz() && c >= c_threshold {
        Ok(Regime::Purcell)
    } else {
        Ok(Regime::Weak)
    }
}

/// Default cooperativity threshold for calling a mode "Purcell".
pub const DEFAULT_C_THRESHOLD: f64 = 1.0;

/// Evaluates one [`QedPoint`] per finesse: `kappa` from the inverse relation,
/// `2 g0` fixed by the cavity length, and exact plus approximate
/// cooperativity. `kappa * F` is the same constant (the FSR) on every row.
pub fn sweep_figure4(
    e: &EmitterParams,
    l_optical: Length,
    finesse_list: &[f64],
    c_threshold: f64,
) -> Result<Vec<QedPoint>, QedError> {
    if finesse_list.is_empty() {
        return Err(QedError::NonPositiveFinesse(f64::NAN));
    }
    let rabi = rabi_frequency(e, l_optical);
    let gamma_ratio = e.gamma.hz() / e.gamma0.hz();
    finesse_list
        .iter()
        .map(|&f| {
            let kappa = cavity_linewidth(f, l_optical)?;
            Ok(QedPoint {
                finesse: f,
                kappa,
                rabi_2g0: rabi,
                cooperativity: cooperativity_exact(rabi, kappa, e.gamma0)?,
                cooperativity_approx: cooperativity(e, f)?,
                gamma_ratio,
                regime: classify_regime(rabi, kappa, e.gamma0, c_threshold)?,
            })
        })
        .collect()
}

/// Brute-force inversion of `C = 4 eta F / pi` against two `(F, C)` anchors:
/// scans `eta` over `[lo, hi]` in the given step and returns the value with
/// the least squared mismatch. This is the documented origin of
/// [`DEFAULT_ETA_TRAPPED`].
pub fn invert_eta_from_anchors(
    anchors: &[(f64, f64)],
    lo: f64,
    hi: f64,
    step: f64,
) -> f64 {
    let mut best = lo;
    let mut best_cost = f64::INFINITY;
    let mut eta = lo;
    while eta <= hi + step / 2.0 {
        let cost: f64 = anchors
            .iter()
            .map(|&(f, c)| (4.0 * eta * f / PI - c).powi(2))
            .sum();
        if cost < best_cost {
            best_cost = cost;
            best = eta;
        }
        eta += step;
    }
    best
}
