use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn uvrg(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_uvrg"))
        .args(args)
        .current_dir(dir)
        .env_remove("UVRG_OUTPUT_DIR")
        .output()
        .expect("binary runs")
}

fn json_rows(dir: &Path, args: &[&str], file: &str) -> Vec<Value> {
    let mut full = vec!["--format", "json"];
    full.extend_from_slice(args);
    let out = uvrg(dir, &full);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(dir.join(file)).unwrap();
    serde_json::from_str::<Value>(&text).unwrap().as_array().unwrap().clone()
}

fn num(row: &Value, key: &str) -> f64 {
    row[key].as_f64().unwrap_or_else(|| panic!("{key} missing in {row}"))
}

#[test]
fn analyze_quartic_reports_uv_prediction() {
    let dir = TempDir::new().unwrap();
    let rows = json_rows(dir.path(), &["analyze", "quartic"], "analyze-quartic.json");
    assert_eq!(rows.len(), 1);
    assert_eq!(num(&rows[0], "rg_energy"), 1.0);
    let err = num(&rows[0], "relative_error");
    assert!((err - 0.057).abs() < 1e-3, "{err}");
}

#[test]
fn analyze_coulomb_negative_branch() {
    let dir = TempDir::new().unwrap();
    let rows = json_rows(
        dir.path(),
        &["analyze", "coulomb", "--sign-policy", "prefer-negative"],
        "analyze-coulomb.json",
    );
    assert!((num(&rows[0], "rg_energy") + 0.5).abs() < 1e-9);
    assert!((num(&rows[0], "oracle_energy") + 0.5).abs() < 1e-3);
}

#[test]
fn analyze_morse_gap_is_constant() {
    let dir = TempDir::new().unwrap();
    let rows = json_rows(dir.path(), &["analyze", "morse", "--A", "1,4,9"], "analyze-morse.json");
    assert_eq!(rows.len(), 3);
    for r in &rows {
        assert!((num(r, "oracle_gap") + 0.125).abs() < 1e-6, "{r}");
    }
}

#[test]
fn kh_flow_keeps_alpha_log_cutoff_fixed() {
    let dir = TempDir::new().unwrap();
    let rows = json_rows(dir.path(), &["flow", "kh", "--K", "1"], "flow-kh.json");
    assert!(rows.len() > 10);
    for r in &rows {
        assert!((num(r, "coupling_log_cutoff") - 1.0).abs() < 1e-10, "{r}");
    }
}

#[test]
fn morse_flow_energy_drift_is_small() {
    let dir = TempDir::new().unwrap();
    let rows = json_rows(dir.path(), &["flow", "morse", "--A", "4"], "flow-morse.json");
    let e: Vec<(f64, f64)> = rows.iter().map(|r| (num(r, "cutoff"), num(r, "energy"))).collect();
    for w in e.windows(2) {
        let decades = (w[1].0 / w[0].0).log10();
        assert!((w[1].1 - w[0].1).abs() / decades < 1e-3, "{w:?}");
    }
}

#[test]
fn quartic_flow_from_fixed_point_holds_energy() {
    let dir = TempDir::new().unwrap();
    let rows = json_rows(dir.path(), &["flow", "quartic", "--start-on-fixed-point"], "flow-quartic.json");
    // The starting point carries the g/(3Λ⁴) correction; the flow then preserves it.
    let e0 = num(&rows[0], "energy");
    assert!((e0 - 1.0).abs() < 1e-3);
    for r in &rows {
        assert!((num(r, "energy") - e0).abs() < 1e-4, "{r}");
    }
}

#[test]
fn kh_scan_columns() {
    let dir = TempDir::new().unwrap();
    let rows = json_rows(dir.path(), &["kh-scan"], "kh-scan.json");
    assert_eq!(rows.len(), 5);
    for r in &rows {
        assert!((num(r, "c2_per_log") - 1.0).abs() < 0.15, "{r}");
        assert!((num(r, "small_field") + 0.49).abs() < 1e-12);
    }
    assert!((num(&rows[4], "c2_per_log") - 1.0).abs() < 0.05);
    let out = uvrg(dir.path(), &["kh-scan"]);
    let stdout = String::from_utf8(out.stdout).unwrap();
    let slope: f64 = stdout
        .lines()
        .find_map(|l| l.strip_prefix("dc0/dlnΛ = "))
        .unwrap()
        .parse()
        .unwrap();
    assert!((slope - 2.0).abs() < 0.05, "{slope}");
}

#[test]
fn config_errors_exit_two() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("bad.toml"), "model = \"quartic\"\nbogus = 1\n").unwrap();
    let out = uvrg(dir.path(), &["--config", "bad.toml", "analyze"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error ["));

    assert_eq!(uvrg(dir.path(), &["analyze", "quartic", "--points", "2"]).status.code(), Some(2));
    assert_eq!(uvrg(dir.path(), &["flow", "coulomb", "--from", "1"]).status.code(), Some(2));
    assert_eq!(uvrg(dir.path(), &["nonsense"]).status.code(), Some(2));
    assert_eq!(uvrg(dir.path(), &["--config", "missing.toml", "analyze"]).status.code(), Some(2));
}

#[test]
fn config_file_supplies_parameters() {
    let dir = TempDir::new().unwrap();
    fs::write(
        dir.path().join("run.toml"),
        "model = \"morse\"\nformat = \"json\"\n[params]\ncoupling = [4.0]\n[grid]\nhalf-width = 18.0\npoints = 4001\ncenter = 12.0\n",
    )
    .unwrap();
    let out = uvrg(dir.path(), &["--config", "run.toml", "analyze"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("analyze-morse.json")).unwrap()).unwrap();
    assert_eq!(rows[0]["coupling"].as_f64(), Some(4.0));
    let exact = -4.0 + 2f64.sqrt() - 0.125;
    assert!((num(&rows[0], "oracle_energy") - exact).abs() < 1e-6);
}

#[test]
fn aborted_flow_exits_one_with_partial_report() {
    let dir = TempDir::new().unwrap();
    let out = uvrg(dir.path(), &["flow", "coulomb", "--g0", "1e-3", "--from", "2", "--to", "1e4"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("[rgflow::integrate_flow]"));
    let csv = fs::read_to_string(dir.path().join("flow-coulomb.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next(),
        Some("cutoff,coupling,beta,energy,energy_alternate,coupling_log_cutoff")
    );
    assert_eq!(lines.count(), 1);
}

#[test]
fn reports_are_deterministic() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    for dir in [&a, &b] {
        assert!(uvrg(dir.path(), &["analyze", "morse", "--A", "1,4"]).status.success());
        assert!(uvrg(dir.path(), &["flow", "quartic"]).status.success());
    }
    for f in ["analyze-morse.csv", "flow-quartic.csv"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn output_dir_from_environment() {
    let dir = TempDir::new().unwrap();
    let target = dir.path().join("reports");
    let out = Command::new(env!("CARGO_BIN_EXE_uvrg"))
        .args(["oracle", "quartic", "--count", "2"])
        .current_dir(dir.path())
        .env("UVRG_OUTPUT_DIR", &target)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(target.join("oracle-quartic.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
}
