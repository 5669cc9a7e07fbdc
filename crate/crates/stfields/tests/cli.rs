//! End-to-end tests of the `stfields` binary: exit codes, file layout, and
//! reproducibility.

use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_stfields"))
}

fn run(args: &[&str]) -> (i32, String, String) {
    let output = bin().args(args).output().unwrap();
    (
        output.status.code().unwrap(),
        String::from_utf8_lossy(&output.stdout).into_owned(),
        String::from_utf8_lossy(&output.stderr).into_owned(),
    )
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn read_csv_rows(path: &Path) -> Vec<Vec<String>> {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let schema = lines.next().unwrap();
    assert!(schema.starts_with("# schema: stfields."), "missing schema header");
    lines
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

const EXAMPLE4_MODEL: &str = r#"{
    "family": "example4",
    "d": 2,
    "base": {"kind": "separable", "family": "exponential", "tau": 1.0,
             "coupling": [[0.5, 0.3], [0.3, 0.4]]},
    "n_max": 24,
    "tail_tol": 0.001
}"#;

#[test]
fn simulate_constant_level_only_field() {
    // A truncation-zero model: the field is constant over the sphere at each
    // time.
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "sim.json",
        r#"{
            "model": {"family": "custom", "dim": 2, "tail_tol": 10.0,
                      "levels": [{"kind": "constant", "matrix": [[1.0]]}]},
            "seed": 5,
            "replicates": 1,
            "times": [0.0, 1.0],
            "sites": {"kind": "points",
                      "points": [[1,0,0],[0,1,0],[0,0,1],[0.6,0.48,0.64]]}
        }"#,
    );
    let (code, _, err) = run(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    let rows = read_csv_rows(&dir.path().join("out/realizations.csv"));
    // header + 1 replicate * 4 sites * 2 times * m=1.
    assert_eq!(rows.len(), 1 + 8);
    for t_col in ["0.0000000000000000e0", "1.0000000000000000e0"] {
        let vals: Vec<&str> = rows[1..]
            .iter()
            .filter(|r| r[5] == t_col)
            .map(|r| r[7].as_str())
            .collect();
        assert_eq!(vals.len(), 4);
        assert!(vals.iter().all(|&v| v == vals[0]), "field not constant at {t_col}");
    }
}

#[test]
fn simulate_row_count_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "sim.json",
        &format!(
            r#"{{
                "model": {EXAMPLE4_MODEL},
                "seed": 11,
                "replicates": 3,
                "times": [0.0, 0.5, 1.0],
                "sites": {{"kind": "points", "points": [[1,0,0],[0,1,0]]}}
            }}"#
        ),
    );
    let out = dir.path().join("out");
    let (code, _, err) = run(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    let rows = read_csv_rows(&out.join("realizations.csv"));
    assert_eq!(rows[0], ["replicate", "site_id", "x0", "x1", "x2", "t", "component", "value"]);
    // replicates * sites * times * m.
    assert_eq!(rows.len() - 1, 3 * 2 * 3 * 2);
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["schema"], "stfields.manifest.v1");
    assert_eq!(manifest["seed"], 11);
    assert_eq!(manifest["replicates"], 3);
    assert_eq!(manifest["m"], 2);
    assert!(manifest["tail_bound"].as_f64().unwrap() <= 1e-3);
    assert_eq!(manifest["poles"].as_array().unwrap().len(), 3);
}

#[test]
fn simulate_is_reproducible_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "sim.json",
        &format!(
            r#"{{
                "model": {EXAMPLE4_MODEL},
                "seed": 7,
                "replicates": 4,
                "times": [0.0, 1.0],
                "sites": {{"kind": "points", "points": [[1,0,0],[0,0,1]]}}
            }}"#
        ),
    );
    let mut runs = Vec::new();
    for name in ["a", "b"] {
        let out = dir.path().join(name);
        let (code, _, err) = run(&[
            "simulate",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code, 0, "{err}");
        let realizations = std::fs::read(out.join("realizations.csv")).unwrap();
        let mut manifest: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap())
                .unwrap();
        // Timing is the only field allowed to differ.
        manifest.as_object_mut().unwrap().remove("elapsed_ms");
        runs.push((realizations, manifest));
    }
    assert_eq!(runs[0].0, runs[1].0, "realizations differ between runs");
    assert_eq!(runs[0].1, runs[1].1, "manifests differ beyond timing");
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "sim.json",
        &format!(
            r#"{{
                "model": {EXAMPLE4_MODEL},
                "seed": 7,
                "replicates": 1,
                "times": [0.0],
                "sites": {{"kind": "points", "points": [[1,0,0]]}}
            }}"#
        ),
    );
    for (name, extra) in [("a", None), ("b", Some("99"))] {
        let out = dir.path().join(name);
        let mut args = vec![
            "simulate".to_string(),
            "--config".into(),
            cfg.to_str().unwrap().into(),
            "--out".into(),
            out.to_str().unwrap().into(),
        ];
        if let Some(seed) = extra {
            args.push("--seed".into());
            args.push(seed.into());
        }
        let output = bin().args(&args).output().unwrap();
        assert_eq!(output.status.code().unwrap(), 0);
    }
    let a = std::fs::read(dir.path().join("a/realizations.csv")).unwrap();
    let b = std::fs::read(dir.path().join("b/realizations.csv")).unwrap();
    assert_ne!(a, b, "--seed override had no effect");
    let manifest: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("b/manifest.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(manifest["seed"], 99);
}

#[test]
fn malformed_config_exits_2_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.json", r#"{"unexpected": true}"#);
    let out = dir.path().join("out");
    let (code, _, err) = run(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 2, "stderr: {err}");
    assert!(!out.exists(), "no output files may be written on config error");
}

#[test]
fn infinite_dimensional_simulation_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "sim.json",
        r#"{
            "model": {"family": "example3",
                      "base": {"kind": "constant", "matrix": [[0.5]]}, "n_max": 48},
            "seed": 1, "replicates": 1, "times": [0.0],
            "sites": {"kind": "points", "points": [[1,0,0]]}
        }"#,
    );
    let (code, _, _) = run(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(code, 3);
}

#[test]
fn cov_table_exponential_cosine_spot_checks() {
    let dir = tempfile::tempdir().unwrap();
    let b = 0.8f64;
    let cfg = write_config(
        dir.path(),
        "cov.json",
        r#"{
            "model": {"family": "example5",
                      "base": {"kind": "constant", "matrix": [[0.8]]}, "n_max": 30},
            "thetas": [0.0, 1.0471975511965976],
            "times": [0.0],
            "series": true
        }"#,
    );
    let out = dir.path().join("out");
    let (code, _, err) = run(&[
        "cov",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    let rows = read_csv_rows(&out.join("covariance.csv"));
    assert_eq!(rows[0], ["theta", "t", "i", "j", "analytic", "series", "residual"]);
    let value = |row: &[String], col: usize| row[col].parse::<f64>().unwrap();
    // ϑ = 0 gives exp(b); ϑ = π/3 gives the closed form; the series column
    // agrees with the analytic one.
    assert!((value(&rows[1], 4) - b.exp()).abs() < 1e-12);
    let theta = std::f64::consts::FRAC_PI_3;
    let expected = (b * theta.cos()).exp() * (b * theta.sin()).cos();
    assert!((value(&rows[2], 4) - expected).abs() < 1e-12);
    for row in &rows[1..] {
        assert!(value(row, 6).abs() < 1e-9, "series residual too large: {row:?}");
    }
}

#[test]
fn cov_lift_matches_source_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "cov.json",
        r#"{
            "model": {"family": "example3",
                      "base": {"kind": "constant", "matrix": [[0.6]]}, "n_max": 120},
            "thetas": [0.7853981633974483, 1.5707963267948966, 2.356194490192345],
            "times": [0.0, 1.0],
            "lift_d": 2
        }"#,
    );
    let out = dir.path().join("out");
    let (code, _, err) = run(&[
        "cov",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    for row in &read_csv_rows(&out.join("covariance.csv"))[1..] {
        let residual: f64 = row[6].parse().unwrap();
        assert!(
            residual.abs() < 1e-6,
            "lifted series disagrees with the closed form: {row:?}"
        );
    }
}

#[test]
fn verify_passes_and_broken_model_fails() {
    let dir = tempfile::tempdir().unwrap();
    // PSD-only subset on a valid model: exit 0.
    let good = write_config(
        dir.path(),
        "good.json",
        &format!(
            r#"{{ "model": {EXAMPLE4_MODEL}, "seed": 3, "checks": ["psd"] }}"#
        ),
    );
    let out_good = dir.path().join("good");
    let (code, stdout, err) = run(&[
        "verify",
        "--config",
        good.to_str().unwrap(),
        "--out",
        out_good.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");
    assert!(stdout.contains("[PASS] verify"));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_good.join("report.json")).unwrap())
            .unwrap();
    assert_eq!(report["schema"], "stfields.report.v1");
    assert_eq!(report["report"]["pass"], true);

    // A deliberately broken model: a negative level coefficient destroys
    // positive definiteness, so the psd check must fail with exit 1.
    let bad = write_config(
        dir.path(),
        "bad.json",
        r#"{
            "model": {"family": "custom", "dim": 2, "tail_tol": 10.0,
                      "levels": [
                          {"kind": "constant", "matrix": [[0.1]]},
                          {"kind": "linear_combination",
                           "terms": [{"coeff": -1.0,
                                      "model": {"kind": "constant", "matrix": [[1.0]]}}]}
                      ]},
            "seed": 3,
            "checks": ["psd"]
        }"#,
    );
    let out_bad = dir.path().join("bad");
    let (code, stdout, _) = run(&[
        "verify",
        "--config",
        bad.to_str().unwrap(),
        "--out",
        out_bad.to_str().unwrap(),
    ]);
    assert_eq!(code, 1);
    assert!(stdout.contains("[FAIL] verify"));
    assert!(out_bad.join("report.json").exists());
}

#[test]
fn expand_tabulates_known_coefficients() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, err) = run(&["expand", "--n", "2", "--d", "2", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    let rows = read_csv_rows(&dir.path().join("expansion.csv"));
    assert_eq!(rows[0], ["n", "d", "k", "degree", "beta"]);
    assert_eq!(rows.len(), 3);
    assert!((rows[1][4].parse::<f64>().unwrap() - 2.0 / 3.0).abs() < 1e-14);
    assert!((rows[2][4].parse::<f64>().unwrap() - 1.0 / 3.0).abs() < 1e-14);

    let (code, _, _) = run(&["expand", "--n", "0", "--d", "5", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code, 0);
    let rows = read_csv_rows(&dir.path().join("expansion.csv"));
    assert_eq!(rows.len(), 2);
    assert!((rows[1][4].parse::<f64>().unwrap() - 1.0).abs() < 1e-14);
}

#[test]
fn extract_round_trips_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "sim.json",
        r#"{
            "model": {"family": "custom", "dim": 2, "tail_tol": 10.0,
                      "levels": [
                          {"kind": "constant", "matrix": [[1.0]]},
                          {"kind": "constant", "matrix": [[0.5]]},
                          {"kind": "constant", "matrix": [[0.25]]}
                      ]},
            "seed": 17,
            "replicates": 2,
            "times": [0.0, 1.0],
            "sites": {"kind": "quadrature_s2", "polar": 6, "azimuth": 12}
        }"#,
    );
    let out = dir.path().join("out");
    let (code, _, err) = run(&[
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{err}");

    let extract = |level: &str, sub: &str| -> Vec<Vec<String>> {
        let out_x = out.join(sub);
        let (code, _, err) = run(&[
            "extract",
            "--realizations",
            out.join("realizations.csv").to_str().unwrap(),
            "--manifest",
            out.join("manifest.json").to_str().unwrap(),
            "--level",
            level,
            "--out",
            out_x.to_str().unwrap(),
        ]);
        assert_eq!(code, 0, "{err}");
        read_csv_rows(&out_x.join("coefficients.csv"))
    };

    let rows = extract("1", "lvl1");
    assert_eq!(rows[0], ["replicate", "level", "t", "component", "value"]);
    // 2 replicates * 2 times * m=1.
    assert_eq!(rows.len() - 1, 4);
    // Deterministic re-extraction.
    assert_eq!(rows, extract("1", "lvl1b"));

    // One past the truncation the projection must vanish.
    for row in &extract("3", "lvl3")[1..] {
        let v: f64 = row[4].parse().unwrap();
        assert!(v.abs() <= 1e-8, "leakage above truncation: {v}");
    }
}

#[test]
fn bad_threads_env_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "cov.json",
        r#"{
            "model": {"family": "example5",
                      "base": {"kind": "constant", "matrix": [[0.8]]}, "n_max": 30},
            "thetas": [0.0], "times": [0.0]
        }"#,
    );
    let output = bin()
        .args(["cov", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()])
        .env("STFIELDS_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(output.status.code().unwrap(), 2);
}

#[test]
fn json_format_emits_schema_field() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, err) = run(&[
        "expand", "--n", "4", "--d", "3",
        "--out", dir.path().to_str().unwrap(),
        "--format", "json",
    ]);
    assert_eq!(code, 0, "{err}");
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("expansion.json")).unwrap())
            .unwrap();
    assert_eq!(doc["schema"], "stfields.expansion.v1");
    assert_eq!(doc["rows"].as_array().unwrap().len(), 3);
}
