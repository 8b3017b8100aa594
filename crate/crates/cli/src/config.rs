//! Layered run configuration: built-in defaults, then an optional config
//! file (`--config` flag or `NFCAV_CONFIG` environment variable), then
//! command-line flags. The fully resolved configuration is embedded in every
//! report for reproducibility.

use crate::errors::CliError;
use crate::formats::{parse_kv, read_file};
use nfcav::qed::EmitterParams;
use nfcav::units::RateHz;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

pub const CONFIG_ENV_VAR: &str = "NFCAV_CONFIG";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DetectionConfig {
    pub min_prominence: f64,
    pub min_spacing_hz: f64,
    pub reflection_residual_gate: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmitterConfig {
    pub preset: String,
    pub gamma0_hz: f64,
    pub gamma_hz: f64,
    pub eta: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub detection: DetectionConfig,
    pub emitter: EmitterConfig,
    pub c_threshold: f64,
    /// Effective index used when converting an FSR into a geometric length.
    pub n_eff: f64,
    /// Linewidth convention of externally supplied kappa tables.
    pub kappa_convention: String,
    /// Provenance of the layering, in application order.
    pub sources: Vec<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let cs = EmitterParams::cesium_trapped_200nm();
        Self {
            detection: DetectionConfig {
                min_prominence: 0.05,
                min_spacing_hz: 0.0,
                reflection_residual_gate: 0.02,
            },
            emitter: EmitterConfig {
                preset: "cs-trapped-200nm".to_string(),
                gamma0_hz: cs.gamma0.hz(),
                gamma_hz: cs.gamma.hz(),
                eta: cs.eta,
            },
            c_threshold: 1.0,
            n_eff: 1.2,
            kappa_convention: "fwhm".to_string(),
            sources: vec!["defaults".to_string()],
        }
    }
}

/// Per-command flag overrides; `None` leaves the layered value untouched.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub min_prominence: Option<f64>,
    pub min_spacing_hz: Option<f64>,
    pub preset: Option<String>,
    pub gamma0_hz: Option<f64>,
    pub gamma_hz: Option<f64>,
    pub eta: Option<f64>,
    pub c_threshold: Option<f64>,
    pub n_eff: Option<f64>,
    pub kappa_convention: Option<String>,
}

impl RunConfig {
    pub fn load(config_flag: Option<&Path>, overrides: &Overrides) -> Result<Self, CliError> {
        let mut config = RunConfig::default();

        let file: Option<PathBuf> = config_flag.map(PathBuf::from).or_else(|| {
            std::env::var_os(CONFIG_ENV_VAR).map(PathBuf::from)
        });
        if let Some(path) = file {
            config.apply_file(&path)?;
            config.sources.push(format!("file:{}", path.display()));
        }

        config.apply_overrides(overrides)?;
        Ok(config)
    }

    fn apply_file(&mut self, path: &Path) -> Result<(), CliError> {
        let origin = path.display().to_string();
        let map = parse_kv(&read_file(path)?, &origin)?;
        for (key, value) in &map {
            let parse_f64 = || {
                value.parse::<f64>().map_err(|e| {
                    CliError::Validation(format!("{origin}: key '{key}' = '{value}': {e}"))
                })
            };
            match key.as_str() {
                "detection.min_prominence" => self.detection.min_prominence = parse_f64()?,
                "detection.min_spacing_hz" => self.detection.min_spacing_hz = parse_f64()?,
                "detection.reflection_residual_gate" => {
                    self.detection.reflection_residual_gate = parse_f64()?
                }
                "emitter.preset" => self.set_preset(value)?,
                "emitter.gamma0_hz" => self.emitter.gamma0_hz = parse_f64()?,
                "emitter.gamma_hz" => self.emitter.gamma_hz = parse_f64()?,
                "emitter.eta" => self.emitter.eta = parse_f64()?,
                "qed.c_threshold" => self.c_threshold = parse_f64()?,
                "analysis.n_eff" => self.n_eff = parse_f64()?,
                "fitloss.kappa_convention" => {
                    self.set_kappa_convention(value, &origin)?;
                }
                other => {
                    return Err(CliError::Validation(format!(
                        "{origin}: unknown config key '{other}'"
                    )))
                }
            }
        }
        Ok(())
    }

    fn apply_overrides(&mut self, ov: &Overrides) -> Result<(), CliError> {
        let mut touched = false;
        if let Some(p) = &ov.preset {
            self.set_preset(p)?;
            touched = true;
        }
        for (slot, value) in [
            (&mut self.detection.min_prominence, ov.min_prominence),
            (&mut self.detection.min_spacing_hz, ov.min_spacing_hz),
            (&mut self.emitter.gamma0_hz, ov.gamma0_hz),
            (&mut self.emitter.gamma_hz, ov.gamma_hz),
            (&mut self.emitter.eta, ov.eta),
            (&mut self.c_threshold, ov.c_threshold),
            (&mut self.n_eff, ov.n_eff),
        ] {
            if let Some(v) = value {
                *slot = v;
                touched = true;
            }
        }
        if let Some(c) = &ov.kappa_convention {
            self.set_kappa_convention(c, "--kappa-convention")?;
            touched = true;
        }
        if touched {
            self.sources.push("flags".to_string());
        }
        Ok(())
    }

    fn set_preset(&mut self, name: &str) -> Result<(), CliError> {
        let params = match name {
            "cs-trapped-200nm" => EmitterParams::cesium_trapped_200nm(),
            "solid-state" => EmitterParams::solid_state_on_surface(),
            other => {
                return Err(CliError::Validation(format!(
                    "unknown emitter preset '{other}' (expected cs-trapped-200nm or solid-state)"
                )))
            }
        };
        self.emitter.preset = name.to_string();
        self.emitter.gamma0_hz = params.gamma0.hz();
        self.emitter.gamma_hz = params.gamma.hz();
        self.emitter.eta = params.eta;
        Ok(())
    }

    fn set_kappa_convention(&mut self, value: &str, origin: &str) -> Result<(), CliError> {
        match value {
            "fwhm" | "hwhm" => {
                self.kappa_convention = value.to_string();
                Ok(())
            }
            other => Err(CliError::Validation(format!(
                "{origin}: kappa convention must be fwhm or hwhm, got '{other}'"
            ))),
        }
    }

    pub fn emitter_params(&self) -> Result<EmitterParams, CliError> {
        EmitterParams::new(
            RateHz::new(self.emitter.gamma0_hz)
                .map_err(|e| CliError::Validation(e.to_string()))?,
            RateHz::new(self.emitter.gamma_hz)
                .map_err(|e| CliError::Validation(e.to_string()))?,
            self.emitter.eta,
        )
        .map_err(|e| CliError::Validation(e.to_string()))
    }

    pub fn hwhm_convention(&self) -> bool {
        self.kappa_convention == "hwhm"
    }
}
