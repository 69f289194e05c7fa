use std::process::Command;

use tempfile::tempdir;

fn shapiro() -> Command {
    Command::new(env!("CARGO_BIN_EXE_shapiro"))
}

#[test]
fn calibrate_reports_operating_point() {
    let out = shapiro().arg("calibrate").output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut rows = csv::Reader::from_reader(text.as_bytes());
    let mut seen = 0;
    for r in rows.records() {
        let r = r.unwrap();
        match &r[0] {
            "delta_e0" => {
                let v: f64 = r[1].parse().unwrap();
                assert!((v - 2.408395).abs() < 1e-5, "{v}");
                seen += 1;
            }
            "omega0" => {
                let v: f64 = r[1].parse().unwrap();
                assert!((v - 0.15).abs() < 1e-5, "{v}");
                seen += 1;
            }
            _ => {}
        }
    }
    assert_eq!(seen, 2);
}

#[test]
fn bad_config_is_a_usage_error() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "[drive]\nfrequency = 2.0\n").unwrap();
    let out = shapiro().arg("--config").arg(&path).arg("calibrate").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));

    let out = shapiro().args(["trajectory", "--omega", "1.0", "--lambda1", "5.0", "--t-final", "1"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn small_scan_writes_table_and_json() {
    let dir = tempdir().unwrap();
    let cfg = dir.path().join("scan.toml");
    std::fs::write(
        &cfg,
        "[scan]\nomega_min = 0.9\nomega_max = 1.1\npoints = 3\nspacing = \"linear\"\nn_atoms = 10\nt_avg = 5.0\n",
    )
    .unwrap();
    let csv_out = dir.path().join("scan.csv");
    let st = shapiro().arg("--config").arg(&cfg).arg("--out").arg(&csv_out).arg("scan").status().unwrap();
    assert!(st.success());
    let mut r = csv::Reader::from_path(&csv_out).unwrap();
    assert!(r.headers().unwrap().iter().any(|h| h == "omega_over_dE0"));
    assert_eq!(r.records().count(), 3);

    let out = shapiro()
        .arg("--config")
        .arg(&cfg)
        .args(["--format", "json", "trajectory", "--omega", "1.0", "--t-final", "2"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v.get("times").is_some(), "{v}");
}

#[test]
fn oracle_runs_on_small_lattice() {
    let out = shapiro()
        .args(["oracle", "--n-atoms", "2", "--sites", "8", "--t-final", "1", "--omega", "1.0"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let h = r.headers().unwrap().clone();
    assert!(h.iter().any(|c| c == "frag"), "{h:?}");
    assert!(r.records().count() > 10);
}
