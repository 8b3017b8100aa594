//! Report structures serialized as JSON with a stable field order.
//! Timestamps are deliberately absent: identical inputs and configuration
//! must produce byte-identical reports.

use crate::config::RunConfig;
use crate::errors::CliError;
use crate::formats::{sha256_hex, write_atomic};
use nfcav::qed::{QedPoint, Regime};
use nfcav::response::{LossBoundary, LossBudget};
use nfcav::specfit::{ModeEntry, ModeTable};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

impl InputDigest {
    pub fn of(path: &Path, bytes: &[u8]) -> Self {
        Self {
            path: path.display().to_string(),
            sha256: sha256_hex(bytes),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModeRow {
    pub center_hz: f64,
    pub fwhm_hz: f64,
    pub fwhm_sigma_hz: Option<f64>,
    pub finesse: Option<f64>,
    /// On-resonance transmission including the fitted baseline.
    pub t0: f64,
    /// On-resonance transmission with the fitted baseline subtracted.
    pub t0_above_baseline: f64,
    pub r0: Option<f64>,
    pub converged: bool,
    pub residual_rms: f64,
}

impl ModeRow {
    pub fn from_entry(mode: &ModeEntry) -> Self {
        Self {
            center_hz: mode.center_hz(),
            fwhm_hz: mode.transmission_fit.fwhm,
            fwhm_sigma_hz: mode.transmission_fit.fwhm_sigma(),
            finesse: mode.finesse,
            t0: mode.t0,
            t0_above_baseline: mode.t0_above_baseline,
            r0: mode.r0,
            converged: mode.transmission_fit.converged,
            residual_rms: mode.transmission_fit.residual_rms,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumSection {
    pub path: String,
    pub samples: usize,
    pub modes: Vec<ModeRow>,
    pub fsr_hz: Option<f64>,
    pub fsr_mad_hz: Option<f64>,
    /// Geometric cavity length from the FSR and the configured n_eff.
    pub cavity_length_m: Option<f64>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LossSection {
    pub kappa_s_hz: f64,
    pub kappa_s_sigma_hz: Option<f64>,
    pub crossing_kappa_hz: f64,
    pub boundary: String,
    pub residual_rms: f64,
    pub converged: bool,
    pub points_used: usize,
    pub kappa_c_hz: Vec<f64>,
    pub per_point_kappa_s_hz: Vec<f64>,
    pub bootstrap_sigma_hz: Option<f64>,
}

impl LossSection {
    pub fn from_budget(budget: &LossBudget, points_used: usize) -> Self {
        Self {
            kappa_s_hz: budget.kappa_s.hz(),
            kappa_s_sigma_hz: budget.kappa_s_sigma.map(|s| s.hz()),
            crossing_kappa_hz: budget.crossing_kappa.hz(),
            boundary: match budget.boundary {
                LossBoundary::Interior => "interior",
                LossBoundary::AtZero => "at_zero",
                LossBoundary::AtUpperBound => "at_upper_bound",
            }
            .to_string(),
            residual_rms: budget.residual_rms,
            converged: budget.converged,
            points_used,
            kappa_c_hz: budget.kappa_c.iter().map(|k| k.hz()).collect(),
            per_point_kappa_s_hz: budget.per_point_kappa_s.iter().map(|k| k.hz()).collect(),
            bootstrap_sigma_hz: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OnePassSection {
    pub value: f64,
    pub sigma: Option<f64>,
    pub fsr_hz: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub tool_version: String,
    pub config: RunConfig,
    pub inputs: Vec<InputDigest>,
    pub spectra: Vec<SpectrumSection>,
    pub loss_budget: Option<LossSection>,
    pub loss_note: Option<String>,
    pub one_pass_transmission: Option<OnePassSection>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QedRow {
    pub finesse: f64,
    pub kappa_hz: f64,
    pub rabi_2g0_hz: f64,
    pub cooperativity: f64,
    pub cooperativity_approx: f64,
    pub gamma_ratio: f64,
    pub regime: String,
}

pub fn regime_label(regime: Regime) -> &'static str {
    match regime {
        Regime::StrongCoupling => "strong_coupling",
        Regime::Purcell => "purcell",
        Regime::Weak => "weak",
    }
}

impl QedRow {
    pub fn from_point(p: &QedPoint) -> Self {
        Self {
            finesse: p.finesse,
            kappa_hz: p.kappa.hz(),
            rabi_2g0_hz: p.rabi_2g0.hz(),
            cooperativity: p.cooperativity,
            cooperativity_approx: p.cooperativity_approx,
            gamma_ratio: p.gamma_ratio,
            regime: regime_label(p.regime).to_string(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QedReport {
    pub tool_version: String,
    pub config: RunConfig,
    pub inputs: Vec<InputDigest>,
    /// Where the finesse list came from (flags or a report file).
    pub source: String,
    pub optical_length_m: f64,
    pub fsr_hz: f64,
    pub rows: Vec<QedRow>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitlossReport {
    pub tool_version: String,
    pub config: RunConfig,
    pub inputs: Vec<InputDigest>,
    pub loss_budget: LossSection,
    pub one_pass_transmission: Option<OnePassSection>,
}

pub fn tool_version() -> String {
    env!("CARGO_PKG_VERSION").to_string()
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

/// Sections with per-mode fits of one analyzed spectrum, before report
/// assembly.
pub fn spectrum_section(path: &Path, samples: usize, table: &ModeTable, n_eff: f64) -> SpectrumSection {
    let cavity_length_m = table.fsr.map(|fsr| {
        nfcav::units::C_VACUUM / (2.0 * n_eff * fsr.hz())
    });
    SpectrumSection {
        path: path.display().to_string(),
        samples,
        modes: table.modes.iter().map(ModeRow::from_entry).collect(),
        fsr_hz: table.fsr.map(|f| f.hz()),
        fsr_mad_hz: table.fsr_mad.map(|f| f.hz()),
        cavity_length_m,
        warnings: table.warnings.clone(),
    }
}
