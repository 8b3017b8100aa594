//! `nfcav qed`: cavity-QED figures of merit for a finesse list or a report.

use crate::config::{Overrides, RunConfig};
use crate::errors::CliError;
use crate::report::{
    tool_version, write_json, AnalysisReport, InputDigest, QedReport, QedRow,
};
use clap::Args;
use nfcav::qed::sweep_figure4;
use nfcav::units::{EffectiveIndex, Length, C_VACUUM};
use std::path::PathBuf;

#[derive(Debug, Args)]
pub struct QedArgs {
    /// Comma-separated finesse values (alternative to --report)
    #[arg(long, value_delimiter = ',')]
    pub finesse: Vec<f64>,
    /// Analysis report JSON to pull finesse list and FSR from
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Optical cavity length, m
    #[arg(long)]
    pub optical_length_m: Option<f64>,
    /// Geometric cavity length, m (combined with --n-eff)
    #[arg(long)]
    pub geometric_length_m: Option<f64>,
    /// Free spectral range, Hz (optical length follows as c / (2 fsr))
    #[arg(long)]
    pub fsr_hz: Option<f64>,
    /// Effective index for --geometric-length-m
    #[arg(long)]
    pub n_eff: Option<f64>,
    /// Emitter preset: cs-trapped-200nm or solid-state
    #[arg(long)]
    pub preset: Option<String>,
    /// Channeling efficiency override
    #[arg(long)]
    pub eta: Option<f64>,
    /// Free-space emitter linewidth override, Hz
    #[arg(long)]
    pub gamma0_hz: Option<f64>,
    /// Near-fiber emission rate override, Hz
    #[arg(long)]
    pub gamma_hz: Option<f64>,
    /// Cooperativity threshold for the Purcell label
    #[arg(long)]
    pub c_threshold: Option<f64>,
    /// Optional JSON output path
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Config file path (overrides NFCAV_CONFIG)
    #[arg(long)]
    pub config: Option<PathBuf>,
}

pub fn run(args: QedArgs) -> Result<(), CliError> {
    let config = RunConfig::load(
        args.config.as_deref(),
        &Overrides {
            preset: args.preset.clone(),
            eta: args.eta,
            gamma0_hz: args.gamma0_hz,
            gamma_hz: args.gamma_hz,
            c_threshold: args.c_threshold,
            n_eff: args.n_eff,
            ..Overrides::default()
        },
    )?;
    let emitter = config.emitter_params()?;

    let mut inputs = Vec::new();
    let (finesse_list, fsr_from_report, source) = match &args.report {
        Some(path) => {
            let bytes = std::fs::read(path).map_err(|e| {
                CliError::validation(&format!("cannot read {}", path.display()), e)
            })?;
            inputs.push(InputDigest::of(path, &bytes));
            let report: AnalysisReport = serde_json::from_slice(&bytes).map_err(|e| {
                CliError::Validation(format!("{}: not an analysis report: {e}", path.display()))
            })?;
            let mut finesse: Vec<f64> = report
                .spectra
                .iter()
                .flat_map(|s| s.modes.iter().filter_map(|m| m.finesse))
                .collect();
            finesse.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let fsr = report
                .spectra
                .iter()
                .find_map(|s| s.fsr_hz);
            (finesse, fsr, format!("report:{}", path.display()))
        }
        None => (args.finesse.clone(), None, "flags".to_string()),
    };
    if finesse_list.is_empty() {
        return Err(CliError::Validation(
            "no finesse values: pass --finesse or a --report with fitted modes".into(),
        ));
    }

    let optical_length_m = if let Some(l) = args.optical_length_m {
        l
    } else if let Some(l_geo) = args.geometric_length_m {
        let n = EffectiveIndex::new(config.n_eff)
            .map_err(|e| CliError::Validation(e.to_string()))?;
        l_geo * n.value()
    } else if let Some(fsr) = args.fsr_hz.or(fsr_from_report) {
        if fsr <= 0.0 {
            return Err(CliError::Validation("fsr must be positive".into()));
        }
        C_VACUUM / (2.0 * fsr)
    } else {
        return Err(CliError::Validation(
            "no cavity length: pass --optical-length-m, --geometric-length-m, --fsr-hz, \
             or a report with an FSR"
                .into(),
        ));
    };
    let l_optical = Length::new(optical_length_m)
        .map_err(|e| CliError::Validation(e.to_string()))?;
    let fsr_hz = C_VACUUM / (2.0 * optical_length_m);

    let points = sweep_figure4(&emitter, l_optical, &finesse_list, config.c_threshold)
        .map_err(|e| CliError::Validation(e.to_string()))?;
    let rows: Vec<QedRow> = points.iter().map(QedRow::from_point).collect();

    println!(
        "emitter: {} (eta {:.4}, gamma0 {:.3} MHz); optical length {:.4} cm, FSR {:.4} GHz",
        config.emitter.preset,
        config.emitter.eta,
        config.emitter.gamma0_hz / 1e6,
        optical_length_m * 100.0,
        fsr_hz / 1e9
    );
    println!(
        "{:>10} {:>12} {:>12} {:>10} {:>10}  regime",
        "finesse", "kappa_MHz", "2g0_MHz", "C", "C_approx"
    );
    for row in &rows {
        println!(
            "{:>10.1} {:>12.3} {:>12.3} {:>10.3} {:>10.3}  {}",
            row.finesse,
            row.kappa_hz / 1e6,
            row.rabi_2g0_hz / 1e6,
            row.cooperativity,
            row.cooperativity_approx,
            row.regime
        );
    }

    if let Some(path) = &args.output {
        let report = QedReport {
            tool_version: tool_version(),
            config,
            inputs,
            source,
            optical_length_m,
            fsr_hz,
            rows,
        };
        write_json(path, &report)?;
    }
    Ok(())
}
