//! File formats: spectrum CSV, flat key=value geometry/config files, loss
//! tables, atomic writes and input digests.
//!
//! Spectrum CSV: a `# axis=<frequency_Hz|wavelength_m>` header line, an
//! optional `# columns=...` line, then comma-separated
//! `axis,transmission[,reflection]` rows (decimal point, LF endings).
//! Floats are written with Rust's shortest round-trip formatting, so
//! identical data produces identical bytes.

use crate::errors::CliError;
use nfcav::gratingsim::{ApodizedGrating, GratingGeometry, IndexModel};
use nfcav::response::LossPoint;
use nfcav::spectrum::{AxisKind, Spectrum};
use nfcav::units::{EffectiveIndex, Length, RateHz};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn read_file(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path)
        .map_err(|e| CliError::validation(&format!("cannot read {}", path.display()), e))
}

/// Writes via a temporary file in the same directory plus rename, so readers
/// never observe a partially written file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    let tmp = path.with_extension(match path.extension() {
        Some(ext) => format!("{}.tmp", ext.to_string_lossy()),
        None => "tmp".to_string(),
    });
    fs::write(&tmp, contents)
        .map_err(|e| CliError::internal(&format!("cannot write {}", tmp.display()), e))?;
    fs::rename(&tmp, path)
        .map_err(|e| CliError::internal(&format!("cannot rename to {}", path.display()), e))
}

pub fn write_spectrum(path: &Path, spec: &Spectrum) -> Result<(), CliError> {
    let mut out = String::new();
    out.push_str(&format!("# axis={}\n", spec.axis_kind().label()));
    let has_r = spec.reflection().is_some();
    let has_t = spec.transmission().is_some();
    let columns = match (has_t, has_r) {
        (true, true) => "axis,transmission,reflection",
        (true, false) => "axis,transmission",
        (false, true) => "axis,reflection",
        (false, false) => unreachable!("spectrum always has a power column"),
    };
    out.push_str(&format!("# columns={columns}\n"));
    for i in 0..spec.len() {
        out.push_str(&format!("{}", spec.axis()[i]));
        if let Some(t) = spec.transmission() {
            out.push_str(&format!(",{}", t[i]));
        }
        if let Some(r) = spec.reflection() {
            out.push_str(&format!(",{}", r[i]));
        }
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())
}

pub fn read_spectrum(path: &Path) -> Result<Spectrum, CliError> {
    let text = read_file(path)?;
    let mut axis_kind: Option<AxisKind> = None;
    let mut columns: Option<Vec<String>> = None;
    let mut axis = Vec::new();
    let mut col2 = Vec::new();
    let mut col3 = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let rest = rest.trim();
            if let Some(v) = rest.strip_prefix("axis=") {
                axis_kind = Some(match v.trim() {
                    "frequency_Hz" => AxisKind::FrequencyHz,
                    "wavelength_m" => AxisKind::WavelengthM,
                    other => {
                        return Err(CliError::Validation(format!(
                            "{}: unknown axis kind '{other}'",
                            path.display()
                        )))
                    }
                });
            } else if let Some(v) = rest.strip_prefix("columns=") {
                columns = Some(v.split(',').map(|s| s.trim().to_string()).collect());
            }
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() < 2 || fields.len() > 3 {
            return Err(CliError::Validation(format!(
                "{}:{}: expected 2 or 3 comma-separated values",
                path.display(),
                lineno + 1
            )));
        }
        let mut parsed = fields.iter().map(|f| {
            f.trim().parse::<f64>().map_err(|e| {
                CliError::Validation(format!(
                    "{}:{}: bad number '{f}': {e}",
                    path.display(),
                    lineno + 1
                ))
            })
        });
        axis.push(parsed.next().unwrap()?);
        col2.push(parsed.next().unwrap()?);
        if let Some(third) = parsed.next() {
            col3.push(third?);
        }
    }
    let axis_kind = axis_kind.ok_or_else(|| {
        CliError::Validation(format!(
            "{}: missing '# axis=' header line",
            path.display()
        ))
    })?;
    if !col3.is_empty() && col3.len() != axis.len() {
        return Err(CliError::Validation(format!(
            "{}: ragged rows (reflection column present only on some lines)",
            path.display()
        )));
    }

    // column roles: default axis,transmission[,reflection]; an explicit
    // columns header may name axis,reflection for reflection-only files
    let col2_is_reflection = columns
        .as_ref()
        .is_some_and(|c| c.len() == 2 && c[1] == "reflection");
    let (transmission, reflection) = if col3.is_empty() {
        if col2_is_reflection {
            (None, Some(col2))
        } else {
            (Some(col2), None)
        }
    } else {
        (Some(col2), Some(col3))
    };
    Ok(Spectrum::new(axis_kind, axis, transmission, reflection)?)
}

/// Parses a flat `key = value` file with `#` comments into an ordered map.
pub fn parse_kv(text: &str, origin: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::Validation(format!("{origin}:{}: expected 'key = value'", lineno + 1))
        })?;
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

fn kv_f64(map: &BTreeMap<String, String>, key: &str, origin: &str) -> Result<f64, CliError> {
    let raw = map
        .get(key)
        .ok_or_else(|| CliError::Validation(format!("{origin}: missing key '{key}'")))?;
    raw.parse::<f64>()
        .map_err(|e| CliError::Validation(format!("{origin}: key '{key}' = '{raw}': {e}")))
}

fn kv_f64_or(
    map: &BTreeMap<String, String>,
    key: &str,
    default: f64,
    origin: &str,
) -> Result<f64, CliError> {
    match map.get(key) {
        None => Ok(default),
        Some(_) => kv_f64(map, key, origin),
    }
}

fn read_grating(
    map: &BTreeMap<String, String>,
    prefix: &str,
    origin: &str,
) -> Result<ApodizedGrating, CliError> {
    let get = |suffix: &str| kv_f64(map, &format!("{prefix}.{suffix}"), origin);
    let period = Length::new(get("period_m")?)
        .map_err(|e| CliError::Validation(format!("{origin}: {prefix}.period_m: {e}")))?;
    let num_periods = get("num_periods")? as u32;
    let width = Length::new(get("profile_width_m")?)
        .map_err(|e| CliError::Validation(format!("{origin}: {prefix}.profile_width_m: {e}")))?;
    let grating = ApodizedGrating::new(
        0.0,
        period,
        num_periods,
        get("peak_depth_m")?,
        width,
        get("depth_to_coupling_per_m2")?,
    )
    .map_err(|e| CliError::Validation(format!("{origin}: {e}")))?
    .with_dc_index(kv_f64_or(
        map,
        &format!("{prefix}.dc_index_per_m"),
        0.0,
        origin,
    )?);
    Ok(grating)
}

/// Reads a compound-cavity geometry file. The two gratings are placed
/// symmetrically around z = 0 with the given gap. The effective index comes
/// either from an explicit `n_eff` or from pinning `bragg_wavelength_m`
/// against grating1's period.
pub fn read_geometry(path: &Path) -> Result<GratingGeometry, CliError> {
    let origin = path.display().to_string();
    let map = parse_kv(&read_file(path)?, &origin)?;

    let grating1 = read_grating(&map, "grating1", &origin)?;
    let grating2 = read_grating(&map, "grating2", &origin)?;
    let gap = kv_f64(&map, "gap_m", &origin)?;
    let background_loss = kv_f64_or(&map, "background_loss_per_m", 0.0, &origin)?;

    let base = if let Some(raw) = map.get("n_eff") {
        let n = raw
            .parse::<f64>()
            .map_err(|e| CliError::Validation(format!("{origin}: n_eff: {e}")))?;
        IndexModel::constant(
            EffectiveIndex::new(n)
                .map_err(|e| CliError::Validation(format!("{origin}: n_eff: {e}")))?,
        )
    } else if map.contains_key("bragg_wavelength_m") {
        let lb = Length::new(kv_f64(&map, "bragg_wavelength_m", &origin)?)
            .map_err(|e| CliError::Validation(format!("{origin}: bragg_wavelength_m: {e}")))?;
        IndexModel::from_bragg(lb, grating1.period)
            .map_err(|e| CliError::Validation(format!("{origin}: {e}")))?
    } else {
        return Err(CliError::Validation(format!(
            "{origin}: need either 'n_eff' or 'bragg_wavelength_m'"
        )));
    };
    let slope = kv_f64_or(&map, "n_eff_slope_per_m", 0.0, &origin)?;
    let index = if slope != 0.0 {
        let lambda_ref = Length::new(kv_f64(&map, "lambda_ref_m", &origin)?)
            .map_err(|e| CliError::Validation(format!("{origin}: lambda_ref_m: {e}")))?;
        IndexModel::with_slope(
            EffectiveIndex::new(base.at(lambda_ref.meters()))
                .map_err(|e| CliError::Validation(format!("{origin}: {e}")))?,
            slope,
            lambda_ref,
        )
    } else {
        base
    };

    GratingGeometry::symmetric_pair(grating1, grating2, gap, index, background_loss)
        .map_err(|e| CliError::Validation(format!("{origin}: {e}")))
}

/// Reads a `kappa_hz,t0,r0[,weight_t,weight_r]` loss table. With the `hwhm`
/// convention the first column is doubled to FWHM.
pub fn read_loss_table(path: &Path, hwhm_convention: bool) -> Result<Vec<LossPoint>, CliError> {
    let text = read_file(path)?;
    let mut points = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Result<Vec<f64>, _> = line
            .split(',')
            .map(|f| f.trim().parse::<f64>())
            .collect();
        let fields = fields.map_err(|e| {
            CliError::Validation(format!("{}:{}: {e}", path.display(), lineno + 1))
        })?;
        if fields.len() != 3 && fields.len() != 5 {
            return Err(CliError::Validation(format!(
                "{}:{}: expected 3 or 5 columns, got {}",
                path.display(),
                lineno + 1,
                fields.len()
            )));
        }
        let factor = if hwhm_convention { 2.0 } else { 1.0 };
        let kappa = RateHz::new(fields[0] * factor).map_err(|e| {
            CliError::Validation(format!("{}:{}: {e}", path.display(), lineno + 1))
        })?;
        points.push(if fields.len() == 5 {
            LossPoint::weighted(kappa, fields[1], fields[2], fields[3], fields[4])
        } else {
            LossPoint::new(kappa, fields[1], fields[2])
        });
    }
    Ok(points)
}
