use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn pdm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pdm"))
        .args(args)
        .env_remove("PDM_OUT_DIR")
        .output()
        .expect("run pdm")
}

fn summary(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8(out.stdout.clone()).unwrap();
    serde_json::from_str(stdout.lines().last().expect("summary line")).unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

#[test]
fn solve_is_deterministic_and_routes_agree() {
    let args = ["solve", "--bits", "6", "--samples", "4000", "--cross-check"];
    let a = summary(&pdm(&args));
    let b = summary(&pdm(&args));
    assert_eq!(a, b);
    assert_eq!(a["command"], "solve");
    assert_eq!(a["p_star"], a["enumeration_p_star"]);
    let (x, y) = (
        a["objective"].as_f64().unwrap(),
        a["enumeration_objective"].as_f64().unwrap(),
    );
    assert!(((x - y) / x).abs() <= 1e-9);
}

#[test]
fn solve_on_saved_surface_matches_fresh_build() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("surface.json");
    let built = summary(&pdm(&[
        "build-surface",
        "--bits",
        "6",
        "--out",
        path.to_str().unwrap(),
    ]));
    assert_eq!(built["code_width"], 6);
    let triangles = built["triangles"].as_u64().unwrap();
    assert!(triangles > 32 && triangles <= 64);
    let fresh = summary(&pdm(&[
        "solve",
        "--bits",
        "6",
        "--samples",
        "3000",
        "--cost",
        "328",
    ]));
    let loaded = summary(&pdm(&[
        "solve",
        "--surface",
        path.to_str().unwrap(),
        "--samples",
        "3000",
        "--cost",
        "328",
    ]));
    assert_eq!(fresh, loaded);
}

#[test]
fn per_price_lists_every_integer_price() {
    let out = pdm(&[
        "solve",
        "--bits",
        "5",
        "--samples",
        "2000",
        "--p-min",
        "400",
        "--p-max",
        "420",
        "--per-price",
    ]);
    let s = summary(&out);
    let stdout = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<Value> = stdout
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(rows.len(), 22);
    assert_eq!(rows[0]["p"], 400);
    assert_eq!(rows[20]["p"], 420);
    let best = rows[..21]
        .iter()
        .map(|r| r["objective"].as_f64().unwrap())
        .fold(f64::MIN, f64::max);
    assert_eq!(best, s["objective"].as_f64().unwrap());
}

#[test]
fn exit_codes() {
    assert_eq!(code(&pdm(&["solve", "--no-such-flag"])), 2);
    assert_eq!(code(&pdm(&["solve", "--theta", "abc"])), 2);
    assert_eq!(code(&pdm(&[])), 2);
    assert_eq!(
        code(&pdm(&["solve", "--params", "/definitely/missing.csv"])),
        3
    );
    assert_eq!(code(&pdm(&["solve", "--bits", "4", "--theta", "0"])), 4);
    assert_eq!(code(&pdm(&["solve", "--bits", "4", "--theta", "1.5"])), 4);

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "m,a0\n1,2\n").unwrap();
    let out = pdm(&["solve", "--params", bad.to_str().unwrap()]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("pi_p"));

    let corrupt = dir.path().join("s.json");
    fs::write(&corrupt, "{\"format\": 1}").unwrap();
    assert_eq!(
        code(&pdm(&["solve", "--surface", corrupt.to_str().unwrap()])),
        3
    );
}

#[test]
fn help_documents_exit_codes_and_schemas() {
    let out = pdm(&["--help"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for needle in ["Exit codes", "PDM_OUT_DIR", "gamma_b", "multipliers"] {
        assert!(text.contains(needle), "help lacks {needle}");
    }
}

fn count_csv_rows(path: &Path) -> usize {
    fs::read_to_string(path).unwrap().lines().count() - 1
}

#[test]
fn study_writes_table_and_charts() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.json");
    fs::write(&config, r#"{"bits": 6, "samples": 2000}"#).unwrap();
    let out_dir = dir.path().join("out");
    let s = summary(&pdm(&[
        "study",
        "--config",
        config.to_str().unwrap(),
        "--out-dir",
        out_dir.to_str().unwrap(),
    ]));
    assert_eq!(s["command"], "study");
    assert_eq!(count_csv_rows(&out_dir.join("study.csv")), 80);
    for chart in [
        "profit_eta.svg",
        "margin_eta.svg",
        "profit_gamma.svg",
        "margin_gamma.svg",
    ] {
        let svg = fs::read_to_string(out_dir.join(chart)).unwrap();
        assert!(
            svg.starts_with("<svg") || svg.starts_with("<?xml"),
            "{chart}"
        );
    }
}

#[test]
fn study_honours_out_dir_env() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.json");
    fs::write(
        &config,
        r#"{"bits": 4, "samples": 500, "costs": [246], "thetas": [1], "targets": ["eta"]}"#,
    )
    .unwrap();
    let out_dir = dir.path().join("env-out");
    let out = Command::new(env!("CARGO_BIN_EXE_pdm"))
        .args(["study", "--config", config.to_str().unwrap()])
        .env("PDM_OUT_DIR", &out_dir)
        .output()
        .unwrap();
    summary(&out);
    assert_eq!(count_csv_rows(&out_dir.join("study.csv")), 5);
}

#[test]
fn study_rejects_unknown_config_keys() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.json");
    fs::write(&config, r#"{"bitz": 6}"#).unwrap();
    assert_eq!(
        code(&pdm(&["study", "--config", config.to_str().unwrap()])),
        3
    );
}

#[test]
fn validation_commands_report_summaries() {
    let v = summary(&pdm(&[
        "validate-surface",
        "--bits",
        "6",
        "--samples",
        "2000",
    ]));
    assert_eq!(v["samples"], 2000);
    assert!(v["mu_q95"].as_f64().unwrap() > 0.0);

    let g = summary(&pdm(&[
        "validate-gap",
        "--bits",
        "6",
        "--samples",
        "2000",
        "--replications",
        "4",
        "--cost",
        "328",
    ]));
    assert_eq!(g["command"], "validate-gap");

    let sim = summary(&pdm(&[
        "simulate-sbm",
        "--pool",
        "300",
        "--replications",
        "3000",
        "--seed",
        "3",
    ]));
    let (mean, closed) = (
        sim["sample_mean"].as_f64().unwrap(),
        sim["closed_form_mean"].as_f64().unwrap(),
    );
    assert!((mean - closed).abs() / closed < 0.02);
}
