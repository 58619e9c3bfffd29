//! End-to-end runs of the compiled binary: artifact correctness, seed
//! determinism, exit codes and the documented output layout.

use std::f64::consts::PI;
use std::path::Path;
use std::process::{Command, Output};

fn fracq(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fracq"))
        .arg("--out-dir")
        .arg(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn parse_csv(content: &str) -> Vec<Vec<f64>> {
    content
        .lines()
        .skip(1)
        .filter(|l| !l.trim().is_empty())
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect()
}

#[test]
fn diffuse_delta_matches_heat_kernel() {
    let dir = tempfile::tempdir().unwrap();
    let out = fracq(
        dir.path(),
        &[
            "diffuse", "--eta", "1", "--mu", "2", "--gamma", "1", "--t", "1", "--n", "256",
            "--length", "32",
        ],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let rows = parse_csv(&read(dir.path(), "snapshot_0.csv"));
    assert_eq!(rows.len(), 256);
    // kernel e^{-u^2/4}/sqrt(4 pi) centered mid-domain (origin -16)
    let mut max_err = 0.0f64;
    for row in &rows {
        let (x, re, im) = (row[0], row[1], row[2]);
        let u = x - 0.0;
        let expected = (-u * u / 4.0).exp() / (4.0 * PI).sqrt();
        max_err = max_err.max((re - expected).abs()).max(im.abs());
    }
    assert!(max_err <= 1e-8, "max error {max_err}");

    let manifest: serde_json::Value =
        serde_json::from_str(&read(dir.path(), "manifest.json")).unwrap();
    assert_eq!(manifest["subcommand"], "diffuse");
    assert_eq!(manifest["parameters"]["mu"], 2.0);
    assert_eq!(manifest["outputs"][0], "snapshot_0.csv");
}

#[test]
fn diffuse_l1_and_msd_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = fracq(
        dir.path(),
        &[
            "diffuse", "--eta", "0.7", "--mu", "2", "--gamma", "1", "--t", "0.5,1",
            "--method", "l1", "--steps-per-unit", "64", "--init", "gaussian", "--width", "1",
            "--delta", "2", "--n", "128", "--length", "32",
        ],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("snapshot_1.csv").exists());
    let msd = parse_csv(&read(dir.path(), "msd.csv"));
    assert!(msd.len() > 60);
    // moments grow with time
    assert!(msd.last().unwrap()[1] > msd[1][1]);
}

#[test]
fn sample_levy_is_seed_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let out = fracq(
            dir.path(),
            &[
                "sample-levy", "--mu", "1.5", "--gamma", "1", "--n-paths", "20", "--n-steps",
                "16", "--dt", "0.1", "--seed", "42",
            ],
        );
        assert!(out.status.success());
    }
    assert_eq!(read(a.path(), "ensemble.csv"), read(b.path(), "ensemble.csv"));
    assert_eq!(read(a.path(), "manifest.json"), read(b.path(), "manifest.json"));

    // a different seed changes the payload
    let c = tempfile::tempdir().unwrap();
    let out = fracq(
        c.path(),
        &[
            "sample-levy", "--mu", "1.5", "--gamma", "1", "--n-paths", "20", "--n-steps", "16",
            "--dt", "0.1", "--seed", "43",
        ],
    );
    assert!(out.status.success());
    assert_ne!(read(a.path(), "ensemble.csv"), read(c.path(), "ensemble.csv"));
}

#[test]
fn estimate_recovers_stability_index_from_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = fracq(
        dir.path(),
        &[
            "sample-levy", "--mu", "1.5", "--gamma", "1", "--n-paths", "4000", "--n-steps",
            "128", "--dt", "0.0078125", "--seed", "7",
        ],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let input = dir.path().join("ensemble.csv");
    let out = fracq(
        dir.path(),
        &["estimate", "--input", input.to_str().unwrap(), "--kind", "levy"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&read(dir.path(), "estimate.json")).unwrap();
    assert_eq!(report["kind"], "stability");
    let mu_hat = report["mu_hat"].as_f64().unwrap();
    assert!((1.35..=1.65).contains(&mu_hat), "mu_hat {mu_hat}");
}

#[test]
fn estimate_recovers_hurst_from_fbm_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = fracq(
        dir.path(),
        &[
            "sample-fbm", "--hurst", "0.3", "--n-paths", "2000", "--n-steps", "128", "--dt",
            "0.0078125", "--seed", "11",
        ],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let manifest: serde_json::Value =
        serde_json::from_str(&read(dir.path(), "manifest.json")).unwrap();
    assert_eq!(manifest["parameters"]["synthesis"], "circulant-embedding");

    let input = dir.path().join("ensemble.csv");
    let out = fracq(
        dir.path(),
        &["estimate", "--input", input.to_str().unwrap(), "--kind", "fbm"],
    );
    assert!(out.status.success());
    let report: serde_json::Value =
        serde_json::from_str(&read(dir.path(), "estimate.json")).unwrap();
    let h = report["hurst_hat"].as_f64().unwrap();
    assert!((0.25..=0.35).contains(&h), "hurst_hat {h}");
}

#[test]
fn fit_reads_range_restricted_power_law() {
    let dir = tempfile::tempdir().unwrap();
    // liver-like synthetic: slope 1.3 inside 1e6..1e8, flat tail outside
    let mut csv = String::from("omega,alpha\n");
    for i in 0..50 {
        let omega = 1e6 * (100.0f64).powf(i as f64 / 49.0);
        let alpha = 2.0 * omega.powf(1.3);
        csv.push_str(&format!("{omega:.17e},{alpha:.17e}\n"));
    }
    csv.push_str("1e3,7e9\n"); // off-regime point that the range must drop
    let input = dir.path().join("liver.csv");
    std::fs::write(&input, csv).unwrap();

    let out = fracq(
        dir.path(),
        &["fit", "--input", input.to_str().unwrap(), "--range", "1e6:1e8"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_str(&read(dir.path(), "fit.json")).unwrap();
    let mu = report["mu"].as_f64().unwrap();
    assert!((mu - 1.3).abs() < 1e-6, "mu {mu}");
    assert!((report["alpha0"].as_f64().unwrap() - 2.0).abs() < 1e-4);
    assert_eq!(report["n"], 50);
}

#[test]
fn bands_free_case_is_folded_dispersion() {
    let dir = tempfile::tempdir().unwrap();
    let out = fracq(
        dir.path(),
        &[
            "bands", "--potential", "cosine", "--v0", "0", "--period", "1", "--mu", "2",
            "--n-bands", "3", "--n-q", "17",
        ],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = parse_csv(&read(dir.path(), "bands.csv"));
    assert_eq!(rows.len(), 17);
    for row in &rows {
        let q = row[0];
        // defaults are m=1, hbar=1, D=1/2: E = |k|^2/2 folded into the zone
        let mut free: Vec<f64> = (-4..=4)
            .map(|m| 0.5 * (q + 2.0 * PI * m as f64).powi(2))
            .collect();
        free.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for n in 0..3 {
            assert!(
                (row[n + 1] - free[n]).abs() <= 1e-9 * free[n].max(1.0),
                "q={q} band {n}"
            );
        }
    }
    // zone center, lowest band: zero energy
    let center = rows.iter().find(|r| r[0].abs() < 1e-12).unwrap();
    assert!(center[1].abs() < 1e-12);
}

#[test]
fn bands_self_check_failure_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = fracq(
        dir.path(),
        &[
            "bands", "--potential", "barrier", "--v0", "80", "--period", "1",
            "--feature-width", "0.3", "--mu", "0.5", "--n-bands", "2", "--n-plane-waves", "9",
        ],
    );
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("not converged"));
}

#[test]
fn schrodinger_split_step_preserves_norm() {
    let dir = tempfile::tempdir().unwrap();
    let out = fracq(
        dir.path(),
        &[
            "schrodinger", "--eta", "1", "--mu", "1.5", "--t", "0.25", "--dt", "0.00125",
            "--potential", "cosine", "--v0", "1", "--period", "2", "--n", "64", "--length",
            "8", "--width", "0.5",
        ],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let manifest: serde_json::Value =
        serde_json::from_str(&read(dir.path(), "manifest.json")).unwrap();
    let norm = manifest["parameters"]["norm"].as_f64().unwrap();
    assert!((norm - 1.0).abs() < 1e-9, "norm {norm}");
    assert_eq!(parse_csv(&read(dir.path(), "psi.csv")).len(), 64);
}

#[test]
fn schrodinger_rejects_potential_with_fractional_eta() {
    let dir = tempfile::tempdir().unwrap();
    let out = fracq(
        dir.path(),
        &[
            "schrodinger", "--eta", "0.5", "--mu", "2", "--t", "1", "--potential", "cosine",
            "--v0", "1", "--period", "2", "--n", "32", "--length", "8",
        ],
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("eta = 1"));
}

#[test]
fn statmech_fermi_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = fracq(
        dir.path(),
        &[
            "statmech", "--beta", "1", "--mu", "2", "--statistics", "fermi", "--mu-c", "5",
            "--e-max", "10", "--n-points", "100",
        ],
    );
    assert!(out.status.success());
    let rows = parse_csv(&read(dir.path(), "statmech.csv"));
    assert_eq!(rows.len(), 100);
    // particle-hole symmetry about the chemical potential
    for (row, partner) in rows.iter().zip(rows.iter().rev()) {
        assert!((row[1] + partner[1] - 1.0).abs() < 1e-12);
    }
}

#[test]
fn relations_table_closes_the_dispersion_chain() {
    let dir = tempfile::tempdir().unwrap();
    let out = fracq(
        dir.path(),
        &[
            "relations", "--eta", "0.8", "--mu", "1.6", "--k-min", "0.1", "--k-max", "10",
            "--n-points", "20", "--log-spaced", "--d-mu", "1",
        ],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows = parse_csv(&read(dir.path(), "relations.csv"));
    assert_eq!(rows.len(), 20);
    for row in &rows {
        let (k, p, nu, energy, kinetic) = (row[0], row[1], row[2], row[3], row[4]);
        // E = D hbar^mu |k|^mu with D=1, hbar=1
        assert!((energy - k.abs().powf(1.6)).abs() <= 1e-12 * energy.max(1.0));
        // Planck relation inverts: h_eta nu^eta = E with h_eta=1
        assert!((nu.powf(0.8) - energy).abs() <= 1e-10 * energy.max(1.0));
        // p^2/2m equals the dispersion energy with these constants... via h_mu
        assert!(p > 0.0 && kinetic > 0.0);
    }
}

#[test]
fn out_dir_env_var_is_honored() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_fracq"))
        .env("FRACQ_OUT_DIR", dir.path())
        .args([
            "statmech", "--beta", "1", "--mu", "1", "--e-max", "4", "--n-points", "10",
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(dir.path().join("statmech.csv").exists());
}

#[test]
fn usage_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let bad_flag = fracq(dir.path(), &["diffuse", "--no-such-flag"]);
    assert_eq!(bad_flag.status.code(), Some(1));
    assert!(!String::from_utf8_lossy(&bad_flag.stderr).is_empty());

    let bad_subcommand = fracq(dir.path(), &["warp"]);
    assert_eq!(bad_subcommand.status.code(), Some(1));

    let bad_eta = fracq(
        dir.path(),
        &["diffuse", "--eta", "1.5", "--mu", "2", "--gamma", "1", "--t", "1"],
    );
    assert_eq!(bad_eta.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad_eta.stderr).contains("error"));

    let missing_file = fracq(
        dir.path(),
        &["fit", "--input", "/nonexistent/data.csv"],
    );
    assert_eq!(missing_file.status.code(), Some(1));
}

#[test]
fn help_exits_0() {
    let out = Command::new(env!("CARGO_BIN_EXE_fracq"))
        .arg("--help")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("diffuse"));
}
