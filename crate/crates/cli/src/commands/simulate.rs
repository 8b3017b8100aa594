//! `nfcav simulate`: geometry file -> transmission/reflection spectrum CSV.

use crate::errors::CliError;
use crate::formats::{read_geometry, write_spectrum};
use clap::Args;
use nfcav::gratingsim::{find_stopband, simulate_spectrum_with, SimOptions, STOPBAND_THRESHOLD};
use std::path::PathBuf;

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Geometry description (flat key = value file)
    #[arg(long)]
    pub geometry: PathBuf,
    /// Lower edge of the wavelength range, nm
    #[arg(long)]
    pub lambda_min_nm: f64,
    /// Upper edge of the wavelength range, nm
    #[arg(long)]
    pub lambda_max_nm: f64,
    /// Wavelength step, pm (alternative to --points)
    #[arg(long, conflicts_with = "points")]
    pub step_pm: Option<f64>,
    /// Number of grid intervals (default 2000 when --step-pm is absent)
    #[arg(long)]
    pub points: Option<usize>,
    /// Output spectrum CSV path
    #[arg(long)]
    pub output: PathBuf,
    /// Override for the transfer-matrix segment length, micrometers
    #[arg(long)]
    pub max_segment_um: Option<f64>,
}

pub fn run(args: SimulateArgs) -> Result<(), CliError> {
    let geom = read_geometry(&args.geometry)?;

    let lo = args.lambda_min_nm * 1e-9;
    let hi = args.lambda_max_nm * 1e-9;
    if !(lo.is_finite() && hi.is_finite()) || lo <= 0.0 || hi <= lo {
        return Err(CliError::Validation(format!(
            "invalid wavelength range {} .. {} nm",
            args.lambda_min_nm, args.lambda_max_nm
        )));
    }
    let n = match (args.step_pm, args.points) {
        (Some(step_pm), None) => {
            if step_pm <= 0.0 {
                return Err(CliError::Validation("step must be positive".into()));
            }
            ((hi - lo) / (step_pm * 1e-12)).round() as usize
        }
        (None, Some(points)) => points,
        (None, None) => 2000,
        (Some(_), Some(_)) => unreachable!("clap conflicts_with"),
    };
    if n < 2 {
        return Err(CliError::Validation(format!(
            "grid of {n} intervals is too coarse"
        )));
    }
    let grid: Vec<f64> = (0..=n)
        .map(|i| lo + (hi - lo) * i as f64 / n as f64)
        .collect();

    let opts = SimOptions {
        max_segment_length_m: args.max_segment_um.map(|um| um * 1e-6),
    };
    let spec = simulate_spectrum_with(&geom, &grid, &opts)?;
    write_spectrum(&args.output, &spec)?;

    println!(
        "wrote {} samples ({:.4} nm .. {:.4} nm) to {}",
        spec.len(),
        args.lambda_min_nm,
        args.lambda_max_nm,
        args.output.display()
    );
    match find_stopband(&spec, STOPBAND_THRESHOLD) {
        Ok((band_lo, band_hi)) => println!(
            "stopband (T < {STOPBAND_THRESHOLD}): {:.4} nm to {:.4} nm ({:.3} nm wide)",
            band_lo * 1e9,
            band_hi * 1e9,
            (band_hi - band_lo) * 1e9
        ),
        Err(_) => println!("stopband (T < {STOPBAND_THRESHOLD}): none in this range"),
    }
    Ok(())
}
