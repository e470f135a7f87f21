use std::process::Command;

const BIN: &str = env!("CARGO_BIN_EXE_etpump");

#[test]
fn list_shows_nine_presets() {
    let out = Command::new(BIN).arg("list").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 9);
    for id in ["fig2", "fig3b", "fig4b", "fig5", "fig6", "fig7", "fig8", "appC", "appE"] {
        assert!(text.lines().any(|l| l.starts_with(id)), "{id} missing");
    }

    let out = Command::new(BIN).args(["list", "--json"]).output().unwrap();
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 9);
}

#[test]
fn validate_accepts_and_rejects() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.toml");
    let cfg = etpump_cli::presets::preset_config("fig3b").unwrap();
    std::fs::write(&good, etpump_cli::config::to_toml(&cfg)).unwrap();
    let out = Command::new(BIN).arg("validate").arg(&good).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, etpump_cli::config::to_toml(&cfg).replace("[network]", "[network]\nj_khz = 0.5")).unwrap();
    let out = Command::new(BIN).arg("validate").arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("j_khz"));
}

#[test]
fn unknown_preset_is_an_error() {
    let out = Command::new(BIN).args(["run", "fig99"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn run_writes_deterministic_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let run = |sub: &str| {
        let out_dir = dir.path().join(sub);
        let out = Command::new(BIN).args(["run", "fig2", "--strict", "--out"]).arg(&out_dir).output().unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        out_dir
    };
    let (a, b) = (run("a"), run("b"));
    let csv_a = std::fs::read_to_string(a.join("fig2.csv")).unwrap();
    assert_eq!(csv_a, std::fs::read_to_string(b.join("fig2.csv")).unwrap());
    assert!(csv_a.starts_with("# scenario: fig2"));
    assert!(csv_a.contains("# etpump "));

    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(a.join("fig2.json")).unwrap()).unwrap();
    assert_eq!(report["scenario"], "fig2");
    assert!(report["metrics"].as_array().unwrap().iter().all(|m| m["passed"] == true));
}

#[test]
fn out_dir_defaults_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(BIN).args(["run", "fig2"]).env("ETPUMP_OUT", dir.path()).output().unwrap();
    assert!(out.status.success());
    assert!(dir.path().join("fig2.csv").exists());
}

#[test]
fn time_series_csv_has_time_columns() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("short.toml");
    std::fs::write(
        &cfg_path,
        r#"
id = "short"
kind = "single-site"
n_c = 6

[et]
delta_e_omega0 = 1.0
g_omega0 = 1.0
v_omega0 = 0.01
omega0_khz = 20.0

[single_site]
duration_ms = 0.2
"#,
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let out = Command::new(BIN).arg("run").arg(&cfg_path).arg("--out").arg(&out_dir).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(out_dir.join("short.csv")).unwrap();
    let header = csv.lines().find(|l| !l.starts_with('#')).unwrap();
    assert!(header.starts_with("t_ms,t_omega0,"), "{header}");
    let row: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).nth(2).unwrap().split(',').collect();
    let t_ms: f64 = row[0].parse().unwrap();
    let t_w: f64 = row[1].parse().unwrap();
    assert!((t_w - t_ms * std::f64::consts::TAU * 20.0).abs() < 1e-9 * t_w.max(1.0));
}
