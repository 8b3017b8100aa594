//! `nfcav fitloss`: standalone loss-rate fit on a (kappa, T0, R0) table.

use crate::config::{Overrides, RunConfig};
use crate::errors::CliError;
use crate::formats::{read_loss_table, sha256_hex};
use crate::report::{tool_version, write_json, FitlossReport, InputDigest, LossSection, OnePassSection};
use clap::Args;
use nfcav::response::{
    bootstrap_kappa_s_sigma, extract_loss_rate, one_pass_transmission,
    one_pass_transmission_sigma,
};
use nfcav::units::RateHz;
use std::path::PathBuf;

#[derive(Debug, Args)]
pub struct FitlossArgs {
    /// CSV table: kappa_hz,t0,r0[,weight_t,weight_r]; # comments allowed
    #[arg(long)]
    pub table: PathBuf,
    /// Output report (JSON)
    #[arg(long)]
    pub report: PathBuf,
    /// Free spectral range in Hz, enables the one-pass transmission estimate
    #[arg(long)]
    pub fsr_hz: Option<f64>,
    /// Linewidth convention of the kappa column (fwhm or hwhm)
    #[arg(long)]
    pub kappa_convention: Option<String>,
    /// Number of bootstrap resamples for an extra uncertainty estimate
    #[arg(long)]
    pub bootstrap: Option<usize>,
    /// Bootstrap RNG seed
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Config file path (overrides NFCAV_CONFIG)
    #[arg(long)]
    pub config: Option<PathBuf>,
}

pub fn run(args: FitlossArgs) -> Result<(), CliError> {
    let config = RunConfig::load(
        args.config.as_deref(),
        &Overrides {
            kappa_convention: args.kappa_convention.clone(),
            ..Overrides::default()
        },
    )?;

    let bytes = std::fs::read(&args.table)
        .map_err(|e| CliError::validation(&format!("cannot read {}", args.table.display()), e))?;
    let points = read_loss_table(&args.table, config.hwhm_convention())?;
    let budget =
        extract_loss_rate(&points).map_err(|e| CliError::Validation(e.to_string()))?;

    let mut loss = LossSection::from_budget(&budget, points.len());
    if let Some(trials) = args.bootstrap {
        loss.bootstrap_sigma_hz = bootstrap_kappa_s_sigma(&points, trials, args.seed)
            .map_err(|e| CliError::Validation(e.to_string()))?
            .map(|s| s.hz());
    }

    let one_pass = match args.fsr_hz {
        Some(fsr_hz) => {
            let fsr = RateHz::new(fsr_hz).map_err(|e| CliError::Validation(e.to_string()))?;
            let value = one_pass_transmission(budget.kappa_s, fsr)
                .map_err(|e| CliError::Guard(e.to_string()))?;
            Some(OnePassSection {
                value,
                sigma: budget
                    .kappa_s_sigma
                    .map(|s| one_pass_transmission_sigma(s, fsr)),
                fsr_hz,
            })
        }
        None => None,
    };

    let report = FitlossReport {
        tool_version: tool_version(),
        config,
        inputs: vec![InputDigest {
            path: args.table.display().to_string(),
            sha256: sha256_hex(&bytes),
        }],
        loss_budget: loss,
        one_pass_transmission: one_pass,
    };
    write_json(&args.report, &report)?;

    print!(
        "kappa_s = {:.4} MHz",
        report.loss_budget.kappa_s_hz / 1e6
    );
    if let Some(sigma) = report.loss_budget.kappa_s_sigma_hz {
        print!(" +/- {:.4} MHz", sigma / 1e6);
    }
    println!(
        " ({} boundary, residual rms {:.3e})",
        report.loss_budget.boundary, report.loss_budget.residual_rms
    );
    if let Some(op) = &report.one_pass_transmission {
        println!("one-pass transmission: {:.4}%", op.value * 100.0);
    }
    Ok(())
}
