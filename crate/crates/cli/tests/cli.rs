use std::fs;
use std::process::{Command, Output};

fn ringqed(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ringqed"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn feasible_region_headline() {
    let o = ringqed(&["routing", "--feasible", "--w", "0.9", "--loss", "0.01"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let nc: f64 = text
        .split("minimal NC = ")
        .nth(1)
        .and_then(|s| s.split_whitespace().next())
        .and_then(|s| s.parse().ok())
        .unwrap_or_else(|| panic!("no NC in {text:?}"));
    assert!((nc - 278.0).abs() < 0.02 * 278.0, "{nc}");
}

#[test]
fn validate_single_atom_defaults() {
    let o = ringqed(&["validate", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["max_relative_deviation_weak_drive"].as_f64().unwrap() < 0.01);
    assert!(stderr(&o).contains("max relative deviation"));
}

#[test]
fn malformed_config_exits_with_key_path() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    fs::write(
        &path,
        r#"{"quantity": "n_tot", "axis1": {"name": "delta", "start": 0, "stop": 1, "points": 3},
            "fixed": {"chain": {"n_atom": 4}}}"#,
    )
    .unwrap();
    let o = ringqed(&["spectrum", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("fixed.chain.n_atom"), "{}", stderr(&o));

    let missing = dir.path().join("missing.json");
    let o = ringqed(&["spectrum", "--config", missing.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let o = ringqed(&["spectrum", "--recipe", "nope"]);
    assert_eq!(o.status.code(), Some(2));
    let o = ringqed(&["no-such-command"]);
    assert_eq!(o.status.code(), Some(2));
    let o = ringqed(&["validate", "--n-atoms", "5"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn scan_output_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("scan.json");
    fs::write(
        &config,
        r#"{"quantity": ["mean_s"], "seed": 5,
            "axis1": {"name": "n_atoms", "start": 2, "stop": 30, "points": 15},
            "axis2": {"name": "sigma", "start": 0, "stop": 0.05, "points": 3},
            "fixed": {"disorder": {"samples": 300}}}"#,
    )
    .unwrap();
    let run = |threads: &str, name: &str| {
        let out = dir.path().join(name);
        let o = ringqed(&[
            "spectrum",
            "--config",
            config.to_str().unwrap(),
            "--threads",
            threads,
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        fs::read(out).unwrap()
    };
    let a = run("1", "a.csv");
    assert_eq!(a, run("4", "b.csv"));
    assert_eq!(String::from_utf8(a).unwrap().lines().count(), 1 + 45);
}

#[test]
fn seed_flag_changes_disorder_draws() {
    let run = |seed: &str| stdout(&ringqed(&["disorder", "--samples", "200", "--seed", seed, "--format", "json"]));
    assert_eq!(run("1"), run("1"));
    assert_ne!(run("1"), run("2"));
}

#[test]
fn json_and_csv_tables_agree() {
    let csv = stdout(&ringqed(&["phase", "--delta-ac", "8"]));
    let json = stdout(&ringqed(&["phase", "--delta-ac", "8", "--format", "json"]));
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    let header: Vec<String> = v["columns"].as_array().unwrap().iter().map(|c| c.as_str().unwrap().to_string()).collect();
    assert_eq!(csv.lines().next().unwrap(), header.join(","));
    assert_eq!(csv.lines().count() - 1, v["rows"].as_array().unwrap().len());
}

#[test]
fn modes_reports_dark_mode_at_full_structure() {
    let o = ringqed(&["modes", "--n-atoms", "6", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["g2"].as_f64().unwrap().abs() < 1e-12);
    assert!((v["g1"].as_f64().unwrap() - 0.5 * 12f64.sqrt()).abs() < 1e-12);
}

#[test]
fn figures_passes_and_writes_tables() {
    let dir = tempfile::tempdir().unwrap();
    let o = ringqed(&["figures", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}\n{}", stdout(&o), stderr(&o));
    assert_eq!(stdout(&o).lines().filter(|l| l.starts_with("PASS")).count(), 10);
    assert!(dir.path().join("router-crossover.csv").exists());
    assert!(dir.path().join("polariton-map-1.csv").exists());
}
