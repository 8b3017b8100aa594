//! CLI acceptance tests, including the end-to-end pipeline determinism
//! criterion. Each test drives the built `nfcav` binary.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_nfcav")
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    Command::new(bin())
        .current_dir(dir)
        .env_remove("NFCAV_CONFIG")
        .args(args)
        .output()
        .expect("binary runs")
}

fn assert_ok(out: &Output) {
    assert!(
        out.status.success(),
        "exit {:?}\nstdout: {}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_slice(&fs::read(path).expect("report exists")).expect("valid JSON")
}

// ---- synthetic comb fixture -------------------------------------------------

/// Comb of two-sided-cavity modes (kappa_s = 15 MHz) at a 10.36 GHz spacing with 1%
/// multiplicative noise; dense sampling near each mode, sparse in between.
fn comb_fixture_content() -> String {
    let fsr = 10.36e9;
    let kappa_s = 15e6;
    let kappas = [27e6, 33e6, 41e6, 59e6, 100e6, 170e6];
    let start = 3.5416e14;

    let mut axis = Vec::new();
    for (k, &kappa) in kappas.iter().enumerate() {
        let center = start + (k as f64 + 0.5) * fsr;
        // dense core: +/- 30 FWHM at FWHM/10
        let n_core = 600;
        for i in 0..=n_core {
            axis.push(center - 30.0 * kappa + 60.0 * kappa * i as f64 / n_core as f64);
        }
        // sparse fill toward the next mode
        let fill_end = start + (k as f64 + 1.0) * fsr + 30.0 * kappa;
        let mut nu = center + 30.0 * kappa;
        while nu < fill_end - 0.2e9 {
            nu += 0.25e9;
            axis.push(nu);
        }
    }
    axis.sort_by(|a, b| a.partial_cmp(b).unwrap());
    axis.dedup();

    let lorentz = |nu: f64, center: f64, kappa: f64| -> f64 {
        let h = kappa / 2.0;
        h * h / ((nu - center).powi(2) + h * h)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut noisy = |v: f64| -> f64 {
        let n: f64 = rng.sample(rand_distr::StandardNormal);
        (v * (1.0 + 0.01 * n)).clamp(0.0, 1.05)
    };

    let mut out = String::from("# axis=frequency_Hz\n# columns=axis,transmission,reflection\n");
    for &nu in &axis {
        let mut t = 0.0;
        let mut r = 1.0;
        for (k, &kappa) in kappas.iter().enumerate() {
            let center = start + (k as f64 + 0.5) * fsr;
            let t0 = (1.0 - kappa_s / kappa).powi(2);
            let r0 = (kappa_s / kappa).powi(2);
            t += t0 * lorentz(nu, center, kappa);
            r *= 1.0 - (1.0 - r0) * lorentz(nu, center, kappa);
        }
        out.push_str(&format!("{},{},{}\n", nu, noisy(t), noisy(r)));
    }
    out
}

fn loss_table_content() -> String {
    let kappa_s = 15e6;
    let mut out = String::from("# columns=kappa_hz,t0,r0\n");
    for kappa in [27e6, 33e6, 41e6, 59e6, 100e6, 170e6f64] {
        let t0 = (1.0 - kappa_s / kappa).powi(2);
        let r0 = (kappa_s / kappa).powi(2);
        out.push_str(&format!("{kappa},{t0},{r0}\n"));
    }
    out
}

/// Regenerates the committed fixtures; run manually with
/// `cargo test -p nfcav-cli -- --ignored write_fixtures`.
#[test]
#[ignore]
fn write_fixtures() {
    fs::write(fixture("comb_kappa_s15.csv"), comb_fixture_content()).unwrap();
    fs::write(fixture("loss_table.csv"), loss_table_content()).unwrap();
}

/// The committed fixtures match their deterministic generators byte for byte.
#[test]
fn fixtures_match_generators() {
    assert_eq!(
        fs::read_to_string(fixture("comb_kappa_s15.csv")).expect("committed comb fixture"),
        comb_fixture_content()
    );
    assert_eq!(
        fs::read_to_string(fixture("loss_table.csv")).expect("committed loss table"),
        loss_table_content()
    );
}

// ---- pipeline ---------------------------------------------------------------

#[test]
fn criterion_12_pipeline_determinism() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let geom = fixture("phcn_pair_weak.geom");

    let simulate = |out_name: &str| {
        let out = run_in(
            dir,
            &[
                "simulate",
                "--geometry",
                geom.to_str().unwrap(),
                "--lambda-min-nm",
                "846.25",
                "--lambda-max-nm",
                "846.62",
                "--points",
                "9000",
                "--output",
                out_name,
            ],
        );
        assert_ok(&out);
    };

    simulate("spec.csv");
    let spec_first = fs::read(dir.join("spec.csv")).unwrap();
    simulate("spec.csv");
    let spec_second = fs::read(dir.join("spec.csv")).unwrap();
    assert_eq!(spec_first, spec_second, "simulate is not deterministic");

    for report in ["r1.json", "r2.json"] {
        let out = run_in(
            dir,
            &[
                "analyze",
                "--spectrum",
                "spec.csv",
                "--report",
                report,
            ],
        );
        assert_ok(&out);
    }
    let r1 = fs::read(dir.join("r1.json")).unwrap();
    let r2 = fs::read(dir.join("r2.json")).unwrap();
    assert_eq!(r1, r2, "analyze reports differ byte-wise");

    for qed_out in ["q1.json", "q2.json"] {
        let out = run_in(
            dir,
            &[
                "qed",
                "--report",
                "r1.json",
                "--output",
                qed_out,
            ],
        );
        assert_ok(&out);
    }
    let q1 = fs::read(dir.join("q1.json")).unwrap();
    let q2 = fs::read(dir.join("q2.json")).unwrap();
    assert_eq!(q1, q2, "qed reports differ byte-wise");
    println!("[PASS] criterion 12: simulate -> analyze -> qed is byte-identical across runs");
}

#[test]
fn pipeline_fsr_matches_geometry_prediction() {
    use nfcav::gratingsim::predicted_fsr;

    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let geom_path = fixture("phcn_pair_weak.geom");
    let out = run_in(
        dir,
        &[
            "simulate",
            "--geometry",
            geom_path.to_str().unwrap(),
            "--lambda-min-nm",
            "846.25",
            "--lambda-max-nm",
            "846.62",
            "--points",
            "9000",
            "--output",
            "spec.csv",
        ],
    );
    assert_ok(&out);
    let out = run_in(
        dir,
        &["analyze", "--spectrum", "spec.csv", "--report", "r.json"],
    );
    assert_ok(&out);

    let report = json(&dir.join("r.json"));
    let fsr = report["spectra"][0]["fsr_hz"].as_f64().expect("fsr in report");

    // independent penetration-depth prediction from the same geometry file
    let g1 = nfcav::gratingsim::ApodizedGrating::new(
        0.0,
        nfcav::units::Length::from_nm(350.0),
        5143,
        140e-9,
        nfcav::units::Length::from_mm(0.9),
        8e9,
    )
    .unwrap();
    let g2 = nfcav::gratingsim::ApodizedGrating::new(
        0.0,
        nfcav::units::Length::from_nm(350.0),
        9714,
        190e-9,
        nfcav::units::Length::from_mm(1.7),
        8e9,
    )
    .unwrap();
    let index = nfcav::gratingsim::IndexModel::from_bragg(
        nfcav::units::Length::from_nm(846.5),
        nfcav::units::Length::from_nm(350.0),
    )
    .unwrap();
    let geom =
        nfcav::gratingsim::GratingGeometry::symmetric_pair(g1, g2, 0.012, index, 0.0).unwrap();
    let predicted = predicted_fsr(&geom, 846.45e-9).unwrap();
    let rel = (fsr - predicted).abs() / predicted;
    assert!(
        rel <= 0.05,
        "analyze FSR {fsr} vs geometry prediction {predicted} ({rel:.3})"
    );
}

// ---- analyze ----------------------------------------------------------------

#[test]
fn analyze_comb_fixture_recovers_loss_budget() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let out = run_in(
        dir,
        &[
            "analyze",
            "--spectrum",
            fixture("comb_kappa_s15.csv").to_str().unwrap(),
            "--plot-dir",
            "plots",
            "--report",
            "report.json",
        ],
    );
    assert_ok(&out);
    let report = json(&dir.join("report.json"));

    let modes = report["spectra"][0]["modes"].as_array().unwrap();
    assert_eq!(modes.len(), 6);
    let fsr = report["spectra"][0]["fsr_hz"].as_f64().unwrap();
    assert!((fsr - 10.36e9).abs() <= 0.005 * 10.36e9, "fsr {fsr}");
    let length = report["spectra"][0]["cavity_length_m"].as_f64().unwrap();
    assert!((length - 0.012).abs() <= 0.012 * 0.02, "length {length}");

    let kappa_s = report["loss_budget"]["kappa_s_hz"].as_f64().unwrap();
    assert!(
        (kappa_s - 15e6).abs() <= 1e6,
        "kappa_s {} MHz outside 15 +/- 1 MHz",
        kappa_s / 1e6
    );
    let one_pass = report["one_pass_transmission"]["value"].as_f64().unwrap();
    assert!(
        (one_pass - 0.9954).abs() <= 0.0004,
        "one-pass {one_pass} outside 0.9954 +/- 0.0004"
    );

    for plot in [
        "plots/t0_vs_kappa.csv",
        "plots/r0_vs_kappa.csv",
        "plots/loss_fit_t0.csv",
        "plots/loss_fit_r0.csv",
    ] {
        assert!(dir.join(plot).exists(), "missing {plot}");
    }
}

#[test]
fn analyze_pools_modes_across_spectra() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    fs::write(dir.join("one.csv"), single_mode_csv()).unwrap();
    let out = run_in(
        dir,
        &[
            "analyze",
            "--spectrum",
            fixture("comb_kappa_s15.csv").to_str().unwrap(),
            "--spectrum",
            "one.csv",
            "--report",
            "r.json",
        ],
    );
    assert_ok(&out);
    let report = json(&dir.join("r.json"));
    assert_eq!(report["spectra"].as_array().unwrap().len(), 2);
    // the T-only spectrum contributes no loss points; the comb's six remain
    assert_eq!(report["loss_budget"]["points_used"].as_u64().unwrap(), 6);
    assert_eq!(report["inputs"].as_array().unwrap().len(), 2);
}

fn single_mode_csv() -> String {
    let mut out = String::from("# axis=frequency_Hz\n# columns=axis,transmission\n");
    let center = 3.5e14;
    let kappa = 40e6;
    for i in 0..=600 {
        let nu = center - 30.0 * kappa + 60.0 * kappa * i as f64 / 600.0;
        let h = kappa / 2.0;
        let t = 0.02 + 0.5 * h * h / ((nu - center).powi(2) + h * h);
        out.push_str(&format!("{nu},{t}\n"));
    }
    out
}

#[test]
fn analyze_single_mode_has_no_fsr_but_succeeds() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    fs::write(dir.join("one.csv"), single_mode_csv()).unwrap();
    let out = run_in(
        dir,
        &["analyze", "--spectrum", "one.csv", "--report", "r.json"],
    );
    assert_ok(&out);
    let report = json(&dir.join("r.json"));
    assert_eq!(report["spectra"][0]["modes"].as_array().unwrap().len(), 1);
    assert!(report["spectra"][0]["fsr_hz"].is_null());
    let warnings = report["spectra"][0]["warnings"].as_array().unwrap();
    assert!(
        warnings.iter().any(|w| w.as_str().unwrap().contains("FSR unavailable")),
        "warnings: {warnings:?}"
    );
}

#[test]
fn analyze_transmission_only_skips_loss_with_note() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    // two modes, T only
    let mut csv = String::from("# axis=frequency_Hz\n# columns=axis,transmission\n");
    for k in 0..2 {
        let center = 3.5e14 + k as f64 * 10.36e9;
        let kappa = 40e6;
        for i in 0..=400 {
            let nu = center - 20.0 * kappa + 40.0 * kappa * i as f64 / 400.0;
            let h: f64 = kappa / 2.0;
            let t = 0.01 + 0.5 * h * h / ((nu - center).powi(2) + h * h);
            csv.push_str(&format!("{nu},{t}\n"));
        }
    }
    fs::write(dir.join("t_only.csv"), csv).unwrap();
    let out = run_in(
        dir,
        &["analyze", "--spectrum", "t_only.csv", "--report", "r.json"],
    );
    assert_ok(&out);
    let report = json(&dir.join("r.json"));
    assert!(report["loss_budget"].is_null());
    let note = report["loss_note"].as_str().unwrap();
    assert!(note.contains("skipped"), "note: {note}");
}

// ---- simulate ---------------------------------------------------------------

#[test]
fn simulate_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();

    // missing geometry file -> validation (2)
    let out = run_in(
        dir,
        &[
            "simulate",
            "--geometry",
            "missing.geom",
            "--lambda-min-nm",
            "845",
            "--lambda-max-nm",
            "848",
            "--output",
            "s.csv",
        ],
    );
    assert_eq!(out.status.code(), Some(2));

    // inverted wavelength range -> validation (2)
    let out = run_in(
        dir,
        &[
            "simulate",
            "--geometry",
            fixture("phcn_pair_weak.geom").to_str().unwrap(),
            "--lambda-min-nm",
            "848",
            "--lambda-max-nm",
            "845",
            "--output",
            "s.csv",
        ],
    );
    assert_eq!(out.status.code(), Some(2));

    // coarse segment override trips the discretization guard (3)
    let out = run_in(
        dir,
        &[
            "simulate",
            "--geometry",
            fixture("phcn_pair_weak.geom").to_str().unwrap(),
            "--lambda-min-nm",
            "845",
            "--lambda-max-nm",
            "848",
            "--max-segment-um",
            "200",
            "--output",
            "s.csv",
        ],
    );
    assert_eq!(out.status.code(), Some(3));

    // window far from the Bragg wavelength trips the validity guard (3)
    let out = run_in(
        dir,
        &[
            "simulate",
            "--geometry",
            fixture("phcn_pair_weak.geom").to_str().unwrap(),
            "--lambda-min-nm",
            "1500",
            "--lambda-max-nm",
            "1501",
            "--output",
            "s.csv",
        ],
    );
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn simulate_zero_depth_geometry_is_flat() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let geom = fs::read_to_string(fixture("phcn_pair_weak.geom"))
        .unwrap()
        .replace("grating1.peak_depth_m = 140e-9", "grating1.peak_depth_m = 0")
        .replace("grating2.peak_depth_m = 190e-9", "grating2.peak_depth_m = 0");
    fs::write(dir.join("flat.geom"), geom).unwrap();
    let out = run_in(
        dir,
        &[
            "simulate",
            "--geometry",
            "flat.geom",
            "--lambda-min-nm",
            "845",
            "--lambda-max-nm",
            "848",
            "--points",
            "50",
            "--output",
            "flat.csv",
        ],
    );
    assert_ok(&out);
    let text = fs::read_to_string(dir.join("flat.csv")).unwrap();
    for line in text.lines().filter(|l| !l.starts_with('#')) {
        let fields: Vec<f64> = line.split(',').map(|f| f.parse().unwrap()).collect();
        assert!((fields[1] - 1.0).abs() < 1e-12, "T = {}", fields[1]);
        assert!(fields[2] < 1e-12, "R = {}", fields[2]);
    }
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("stopband (T < 0.1): none"));
}

#[test]
fn reversed_geometry_gives_identical_transmission() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let original = fs::read_to_string(fixture("phcn_pair_weak.geom")).unwrap();
    let swapped = original
        .replace("grating1.", "gratingX.")
        .replace("grating2.", "grating1.")
        .replace("gratingX.", "grating2.");
    fs::write(dir.join("fwd.geom"), original).unwrap();
    fs::write(dir.join("rev.geom"), swapped).unwrap();

    for (geom, out_name) in [("fwd.geom", "fwd.csv"), ("rev.geom", "rev.csv")] {
        let out = run_in(
            dir,
            &[
                "simulate",
                "--geometry",
                geom,
                "--lambda-min-nm",
                "846.3",
                "--lambda-max-nm",
                "846.5",
                "--points",
                "400",
                "--output",
                out_name,
            ],
        );
        assert_ok(&out);
    }
    let parse = |name: &str| -> Vec<f64> {
        fs::read_to_string(dir.join(name))
            .unwrap()
            .lines()
            .filter(|l| !l.starts_with('#'))
            .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
            .collect()
    };
    let fwd = parse("fwd.csv");
    let rev = parse("rev.csv");
    assert_eq!(fwd.len(), rev.len());
    for (a, b) in fwd.iter().zip(&rev) {
        assert!((a - b).abs() <= 1e-10, "reciprocity broken: {a} vs {b}");
    }
}

// ---- fitloss ----------------------------------------------------------------

#[test]
fn fitloss_noiseless_table_recovers_exactly() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let out = run_in(
        dir,
        &[
            "fitloss",
            "--table",
            fixture("loss_table.csv").to_str().unwrap(),
            "--fsr-hz",
            "10.36e9",
            "--report",
            "loss.json",
        ],
    );
    assert_ok(&out);
    let report = json(&dir.join("loss.json"));
    let kappa_s = report["loss_budget"]["kappa_s_hz"].as_f64().unwrap();
    assert!((kappa_s - 15e6).abs() <= 15.0, "kappa_s {kappa_s}");
    assert_eq!(report["loss_budget"]["boundary"], "interior");
    let one_pass = report["one_pass_transmission"]["value"].as_f64().unwrap();
    assert!((one_pass - 0.995451).abs() <= 1e-5);
}

#[test]
fn fitloss_hwhm_convention_doubles_kappa() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    // same table expressed as HWHM
    let halved: String = fs::read_to_string(fixture("loss_table.csv"))
        .unwrap()
        .lines()
        .map(|l| {
            if l.starts_with('#') {
                l.to_string() + "\n"
            } else {
                let mut parts = l.split(',');
                let kappa: f64 = parts.next().unwrap().parse().unwrap();
                format!("{},{}\n", kappa / 2.0, parts.collect::<Vec<_>>().join(","))
            }
        })
        .collect();
    fs::write(dir.join("hwhm.csv"), halved).unwrap();
    let out = run_in(
        dir,
        &[
            "fitloss",
            "--table",
            "hwhm.csv",
            "--kappa-convention",
            "hwhm",
            "--report",
            "loss.json",
        ],
    );
    assert_ok(&out);
    let report = json(&dir.join("loss.json"));
    let kappa_s = report["loss_budget"]["kappa_s_hz"].as_f64().unwrap();
    assert!((kappa_s - 15e6).abs() <= 15.0, "kappa_s {kappa_s}");
}

// ---- qed --------------------------------------------------------------------

#[test]
fn qed_reference_finesse_rows() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let out = run_in(
        dir,
        &[
            "qed",
            "--finesse",
            "175,252,314,384",
            "--geometric-length-m",
            "0.012",
            "--n-eff",
            "1.2",
            "--output",
            "qed.json",
        ],
    );
    assert_ok(&out);
    let report = json(&dir.join("qed.json"));
    let rows = report["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 4);
    // kappa = 59.5 MHz at F = 175 exceeds 2g0 = 51 MHz: Purcell; the three
    // high-finesse modes are strongly coupled
    assert_eq!(rows[0]["regime"], "purcell");
    for row in &rows[1..] {
        assert_eq!(row["regime"], "strong_coupling");
        assert!(row["kappa_hz"].as_f64().unwrap() < 50e6);
    }
    let rabi = rows[0]["rabi_2g0_hz"].as_f64().unwrap();
    assert!((rabi - 51e6).abs() <= 1e6, "2g0 {rabi}");
}

#[test]
fn qed_band_edge_cooperativity() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let out = run_in(
        dir,
        &[
            "qed",
            "--finesse",
            "61",
            "--fsr-hz",
            "10.36e9",
            "--output",
            "qed.json",
        ],
    );
    assert_ok(&out);
    let report = json(&dir.join("qed.json"));
    let row = &report["rows"][0];
    assert_eq!(row["regime"], "purcell");
    let c = row["cooperativity"].as_f64().unwrap();
    assert!((c - 3.0).abs() <= 0.1, "C = {c}");
}

#[test]
fn qed_eta_zero_is_weak_everywhere() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let out = run_in(
        dir,
        &[
            "qed",
            "--finesse",
            "61,175,384",
            "--fsr-hz",
            "10.36e9",
            "--eta",
            "0",
            "--output",
            "qed.json",
        ],
    );
    assert_ok(&out);
    let report = json(&dir.join("qed.json"));
    for row in report["rows"].as_array().unwrap() {
        assert_eq!(row["regime"], "weak");
        assert_eq!(row["cooperativity"].as_f64().unwrap(), 0.0);
    }
}

#[test]
fn qed_invalid_preset_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_in(
        tmp.path(),
        &[
            "qed",
            "--finesse",
            "100",
            "--fsr-hz",
            "10.36e9",
            "--preset",
            "unobtainium",
        ],
    );
    assert_eq!(out.status.code(), Some(2));
}

// ---- config layering --------------------------------------------------------

#[test]
fn config_file_and_flags_layer_in_order() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    fs::write(
        dir.join("nfcav.conf"),
        "detection.min_prominence = 0.2\nanalysis.n_eff = 1.25\n",
    )
    .unwrap();
    fs::write(dir.join("one.csv"), single_mode_csv()).unwrap();

    // via environment variable
    let out = Command::new(bin())
        .current_dir(dir)
        .env("NFCAV_CONFIG", dir.join("nfcav.conf"))
        .args([
            "analyze",
            "--spectrum",
            "one.csv",
            "--report",
            "env.json",
            "--min-prominence",
            "0.3",
        ])
        .output()
        .unwrap();
    assert_ok(&out);
    let report = json(&dir.join("env.json"));
    // flag beats file; file beats default
    assert_eq!(
        report["config"]["detection"]["min_prominence"].as_f64().unwrap(),
        0.3
    );
    assert_eq!(report["config"]["n_eff"].as_f64().unwrap(), 1.25);
    let sources: Vec<&str> = report["config"]["sources"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s.as_str().unwrap())
        .collect();
    assert_eq!(sources[0], "defaults");
    assert!(sources[1].starts_with("file:"));
    assert_eq!(sources[2], "flags");

    let out = run_in(tmp.path(), &["version"]);
    assert_ok(&out);
    assert!(String::from_utf8_lossy(&out.stdout).contains("nfcav 0.1.0"));
}
