//! `nfcav analyze`: spectrum file(s) -> mode table, FSR/finesse, loss budget.

use crate::config::{Overrides, RunConfig};
use crate::errors::CliError;
use crate::formats::{read_spectrum, write_atomic};
use crate::report::{
    spectrum_section, tool_version, write_json, AnalysisReport, InputDigest, LossSection,
    OnePassSection,
};
use clap::Args;
use nfcav::response::{
    extract_loss_rate, on_resonance_tr, one_pass_transmission, one_pass_transmission_sigma,
    LossPoint,
};
use nfcav::specfit::{build_mode_table, DetectionParams};
use nfcav::units::RateHz;
use std::path::{Path, PathBuf};

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Spectrum CSV; repeat the flag to pool several spectra of one cavity
    #[arg(long, required = true)]
    pub spectrum: Vec<PathBuf>,
    /// Separate reflection-only CSV sharing the first spectrum's axis
    #[arg(long)]
    pub reflection: Option<PathBuf>,
    /// Output report (JSON)
    #[arg(long)]
    pub report: PathBuf,
    /// Directory for plot-data CSV files (one curve per file)
    #[arg(long)]
    pub plot_dir: Option<PathBuf>,
    /// Config file path (overrides NFCAV_CONFIG)
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Minimum peak prominence, normalized power units
    #[arg(long)]
    pub min_prominence: Option<f64>,
    /// Minimum mode spacing accepted by the detector, Hz
    #[arg(long)]
    pub min_spacing_hz: Option<f64>,
    /// Effective index for FSR-to-length conversion
    #[arg(long)]
    pub n_eff: Option<f64>,
}

pub fn run(args: AnalyzeArgs) -> Result<(), CliError> {
    let config = RunConfig::load(
        args.config.as_deref(),
        &Overrides {
            min_prominence: args.min_prominence,
            min_spacing_hz: args.min_spacing_hz,
            n_eff: args.n_eff,
            ..Overrides::default()
        },
    )?;
    let detection = DetectionParams {
        min_prominence: config.detection.min_prominence,
        min_spacing_hz: config.detection.min_spacing_hz,
        reflection_residual_gate: config.detection.reflection_residual_gate,
    };

    let mut inputs = Vec::new();
    let mut sections = Vec::new();
    let mut loss_points: Vec<LossPoint> = Vec::new();
    let mut fsr_candidates: Vec<f64> = Vec::new();

    for (index, path) in args.spectrum.iter().enumerate() {
        let bytes = std::fs::read(path)
            .map_err(|e| CliError::validation(&format!("cannot read {}", path.display()), e))?;
        inputs.push(InputDigest::of(path, &bytes));

        let mut spec = read_spectrum(path)?;
        if index == 0 {
            if let Some(refl_path) = &args.reflection {
                let refl_bytes = std::fs::read(refl_path).map_err(|e| {
                    CliError::validation(&format!("cannot read {}", refl_path.display()), e)
                })?;
                inputs.push(InputDigest::of(refl_path, &refl_bytes));
                let refl = read_spectrum(refl_path)?;
                spec = spec.with_reflection_from(&refl)?;
            }
        }
        let spec = spec.to_frequency();
        let table = build_mode_table(&spec, &detection)
            .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;

        for mode in &table.modes {
            if let (true, Some(r0)) = (mode.transmission_fit.converged, mode.r0) {
                loss_points.push(LossPoint::new(mode.fwhm(), mode.t0, r0));
            }
        }
        if let Some(fsr) = table.fsr {
            fsr_candidates.push(fsr.hz());
        }
        sections.push(spectrum_section(path, spec.len(), &table, config.n_eff));
    }

    let (loss_budget, loss_note, one_pass) = if loss_points.len() >= 2 {
        match extract_loss_rate(&loss_points) {
            Ok(budget) => {
                let one_pass = fsr_candidates.first().and_then(|&fsr_hz| {
                    let fsr = RateHz::from_hz(fsr_hz);
                    one_pass_transmission(budget.kappa_s, fsr).ok().map(|value| {
                        OnePassSection {
                            value,
                            sigma: budget
                                .kappa_s_sigma
                                .map(|s| one_pass_transmission_sigma(s, fsr)),
                            fsr_hz,
                        }
                    })
                });
                let note = if one_pass.is_none() {
                    Some("one-pass transmission skipped: no FSR estimate available".to_string())
                } else {
                    None
                };
                (
                    Some(LossSection::from_budget(&budget, loss_points.len())),
                    note,
                    one_pass,
                )
            }
            Err(e) => (None, Some(format!("loss extraction failed: {e}")), None),
        }
    } else {
        (
            None,
            Some(format!(
                "loss extraction skipped: need >= 2 modes with both T0 and R0, found {}",
                loss_points.len()
            )),
            None,
        )
    };

    if let Some(dir) = &args.plot_dir {
        write_plot_data(dir, &loss_points, loss_budget.as_ref())?;
    }

    let report = AnalysisReport {
        tool_version: tool_version(),
        config,
        inputs,
        spectra: sections,
        loss_budget,
        loss_note,
        one_pass_transmission: one_pass,
    };
    write_json(&args.report, &report)?;
    print_summary(&report);
    Ok(())
}

fn print_summary(report: &AnalysisReport) {
    for section in &report.spectra {
        let finesse: Vec<f64> = section.modes.iter().filter_map(|m| m.finesse).collect();
        print!(
            "{}: {} modes",
            section.path,
            section.modes.len()
        );
        if let Some(fsr) = section.fsr_hz {
            print!(", FSR {:.4} GHz", fsr / 1e9);
        }
        if let Some(l) = section.cavity_length_m {
            print!(", cavity length {:.4} cm", l * 100.0);
        }
        if let (Some(min), Some(max)) = (
            finesse.iter().cloned().reduce(f64::min),
            finesse.iter().cloned().reduce(f64::max),
        ) {
            print!(", finesse {min:.0}..{max:.0}");
        }
        println!();
        for warning in &section.warnings {
            println!("  warning: {warning}");
        }
    }
    if let Some(loss) = &report.loss_budget {
        print!(
            "loss budget: kappa_s = {:.3} MHz",
            loss.kappa_s_hz / 1e6
        );
        if let Some(sigma) = loss.kappa_s_sigma_hz {
            print!(" +/- {:.3} MHz", sigma / 1e6);
        }
        println!(
            " (T0=R0 crossing at {:.3} MHz, {} points)",
            loss.crossing_kappa_hz / 1e6,
            loss.points_used
        );
    }
    if let Some(note) = &report.loss_note {
        println!("note: {note}");
    }
    if let Some(op) = &report.one_pass_transmission {
        print!("one-pass intra-cavity transmission: {:.4}%", op.value * 100.0);
        if let Some(sigma) = op.sigma {
            print!(" +/- {:.4}%", sigma * 100.0);
        }
        println!();
    }
    println!("report written");
}

/// Plot data: measured (kappa, T0) and (kappa, R0) points plus the fitted
/// on-resonance curves, one curve per CSV file with units in the header.
fn write_plot_data(
    dir: &Path,
    points: &[LossPoint],
    loss: Option<&LossSection>,
) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::internal(&format!("cannot create {}", dir.display()), e))?;

    let mut t0 = String::from("# columns=kappa_hz,t0\n");
    let mut r0 = String::from("# columns=kappa_hz,r0\n");
    for p in points {
        t0.push_str(&format!("{},{}\n", p.kappa.hz(), p.t0));
        r0.push_str(&format!("{},{}\n", p.kappa.hz(), p.r0));
    }
    write_atomic(&dir.join("t0_vs_kappa.csv"), t0.as_bytes())?;
    write_atomic(&dir.join("r0_vs_kappa.csv"), r0.as_bytes())?;

    if let (Some(loss), false) = (loss, points.is_empty()) {
        let kappa_s = loss.kappa_s_hz;
        let k_min = points.iter().map(|p| p.kappa.hz()).fold(f64::INFINITY, f64::min);
        let k_max = points.iter().map(|p| p.kappa.hz()).fold(0.0f64, f64::max);
        let lo = (k_min * 0.8).max(kappa_s * 1.001);
        let hi = k_max * 1.2;
        let mut fit_t = String::from("# columns=kappa_hz,t0_model\n");
        let mut fit_r = String::from("# columns=kappa_hz,r0_model\n");
        for i in 0..=200 {
            let kappa = lo + (hi - lo) * i as f64 / 200.0;
            let kc = (kappa - kappa_s) / 2.0;
            if let Ok((t, r)) = on_resonance_tr(
                RateHz::from_hz(kc.max(0.0)),
                RateHz::from_hz(kappa_s),
            ) {
                fit_t.push_str(&format!("{kappa},{t}\n"));
                fit_r.push_str(&format!("{kappa},{r}\n"));
            }
        }
        write_atomic(&dir.join("loss_fit_t0.csv"), fit_t.as_bytes())?;
        write_atomic(&dir.join("loss_fit_r0.csv"), fit_r.as_bytes())?;
    }
    Ok(())
}
