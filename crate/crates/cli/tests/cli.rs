use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn semimart(config: &Path, out: &Path, extra: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_semimart"))
        .args(["run", "--config"])
        .arg(config)
        .arg("--output-dir")
        .arg(out)
        .args(extra)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path
}

#[test]
fn ito_verify_writes_outputs_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "ito.json",
        r#"{
  "experiment": "ito-verify",
  "truncation": 32,
  "quad_order": 80,
  "levels": [4, 6],
  "replicas": 4,
  "seed": 3
}"#,
    );
    let out = dir.path().join("out");
    let result = semimart(&config, &out, &[]);
    assert_eq!(
        result.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&result.stderr)
    );

    let residuals = fs::read_to_string(out.join("residuals.csv")).unwrap();
    let mut lines = residuals.lines();
    assert_eq!(
        lines.next(),
        Some("seed,replica,mesh_level,phi_id,T_id,residual")
    );
    assert_eq!(lines.count(), 4 * 2 * 4 * 2);

    let echo: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("resolved_config.json")).unwrap())
            .unwrap();
    assert_eq!(echo["grid_cells"], 64);
    assert_eq!(echo["jump_intensity"], 0.0);
    let summary = fs::read_to_string(out.join("summary.txt")).unwrap();
    assert!(summary.starts_with("# metadata\n"));
    assert!(summary.contains("PASS ito-verify"));
}

#[test]
fn negative_sigma_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "bad.json",
        "{\n  \"experiment\": \"ito-verify\",\n  \"sigma\": -1\n}\n",
    );
    let result = semimart(&config, &dir.path().join("out"), &[]);
    assert_eq!(result.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&result.stderr);
    assert!(stderr.contains("sigma"), "{stderr}");
    assert!(stderr.contains("line 3"), "{stderr}");
    assert!(!dir.path().join("out").exists());
}

#[test]
fn failed_tolerance_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "strict.json",
        r#"{"experiment": "ito-verify", "truncation": 16, "quad_order": 40, "levels": [3, 4],
            "replicas": 2, "tolerances": {"ito_median": 1e-9}}"#,
    );
    let result = semimart(&config, &dir.path().join("out"), &[]);
    assert_eq!(result.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&result.stdout).contains("FAIL"));
}

#[test]
fn same_seed_gives_identical_csvs() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(
        dir.path(),
        "sim.json",
        r#"{"experiment": "simulate", "jump_intensity": 3, "levels": [6], "replicas": 5}"#,
    );
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let c = dir.path().join("c");
    assert_eq!(
        semimart(&config, &a, &["--seed", "11"]).status.code(),
        Some(0)
    );
    assert_eq!(
        semimart(&config, &b, &["--seed", "11"]).status.code(),
        Some(0)
    );
    assert_eq!(
        semimart(&config, &c, &["--seed", "12"]).status.code(),
        Some(0)
    );
    for i in 0..5 {
        let name = format!("path_{i:04}.csv");
        assert_eq!(
            fs::read(a.join(&name)).unwrap(),
            fs::read(b.join(&name)).unwrap()
        );
    }
    assert_ne!(
        fs::read(a.join("path_0000.csv")).unwrap(),
        fs::read(c.join("path_0000.csv")).unwrap()
    );
}
