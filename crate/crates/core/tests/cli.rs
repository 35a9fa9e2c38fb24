use std::process::{Command, Output};

fn cbessel(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cbessel")).args(args).env_remove("CBESSEL_WORKERS").output().unwrap()
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn eval_prints_a_value_record() {
    let out = cbessel(&["eval", "bessel-j", "--nu", "0", "--z", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let re = v[0]["value"]["re"].as_f64().unwrap();
    assert!((re - 0.7651976865579666).abs() < 1e-15);
    assert_eq!(v[0]["provenance"]["version"].as_str().unwrap().split(' ').next(), Some(env!("CARGO_PKG_VERSION")));
}

#[test]
fn negative_complex_arguments_parse() {
    let out = cbessel(&["eval", "gamma", "--z", "-0.5+0.1i"]);
    assert_eq!(out.status.code(), Some(0));
    let out = cbessel(&["eval", "besselc", "--mu", "-0.3i", "--m", "-2", "--z", "-2-1e-1i"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn validation_errors_exit_2_without_output() {
    for args in [
        &["verify", "weber", "--nu", "-1.5"][..],
        &["verify", "fourier", "--mu", "0.2i,0.4i", "--m", "0"],
        &["verify", "spherical", "--mu", "0.7"],
        &["eval", "bessel-k", "--z", "1+1i"],
        &["orbital", "nn", "--a", "0", "--c", "1"],
        &["eval", "besselc", "--mu", "1+"],
    ] {
        let out = cbessel(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(out.stdout.is_empty(), "{args:?}");
    }
}

#[test]
fn csv_and_output_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.csv");
    let out = cbessel(&["verify", "hardy", "--nu", "0.5", "--y", "1", "--format", "csv", "--output", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let mut rd = csv::Reader::from_path(&path).unwrap();
    let head = rd.headers().unwrap().clone();
    assert_eq!(&head[0], "suite");
    let rows: Vec<csv::StringRecord> = rd.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 2);
    for r in &rows {
        assert_eq!(&r[0], "hardy");
        assert_eq!(&r[12], "true");
    }
}

#[test]
fn config_file_and_command_line_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"command": ["verify", "bessel-identity"], "samples": 4, "seed": 3}"#).unwrap();
    let base = cbessel(&["--config", cfg.to_str().unwrap()]);
    assert_eq!(base.status.code(), Some(0));
    assert_eq!(json(&base).as_array().unwrap().len(), 4);
    let over = cbessel(&["--config", cfg.to_str().unwrap(), "--samples", "2"]);
    let v = json(&over);
    assert_eq!(v.as_array().unwrap().len(), 2);
    assert_eq!(v[0]["provenance"]["config"]["command"]["verify"]["suite"]["bessel-identity"]["samples"], 2);
    let direct = cbessel(&["verify", "bessel-identity", "--samples", "2", "--seed", "3"]);
    assert_eq!(direct.stdout, over.stdout);
}

#[test]
fn timing_is_opt_in() {
    let plain = json(&cbessel(&["eval", "gamma", "--z", "2"]));
    assert!(plain[0]["runtime_ms"].is_null());
    let timed = json(&cbessel(&["--timing", "eval", "gamma", "--z", "2"]));
    assert!(timed[0]["runtime_ms"].as_f64().unwrap() >= 0.0);
}

#[test]
fn orbital_structural_zero_is_flagged() {
    // |a| far below the support of the determinant bump.
    let out = cbessel(&["orbital", "nn", "--a", "1e-3", "--c", "0.5"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v[0]["value"]["re"], 0.0);
    assert_eq!(v[0]["flags"][0], "structural_zero");
}
