use std::f64::consts::PI;
use std::path::Path;
use std::process::{Command, Output};

use vacuum_berry::geometry::berry_vacuum;
use vacuum_berry::models::JcmParams;
use vacuum_berry::table::{strip_timestamp, CsvTable};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vacuum-berry"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn table(path: &Path) -> CsvTable {
    CsvTable::parse(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn every_command_answers_help() {
    for cmd in ["fig1", "fig4", "berry", "ramsey", "raman-validate", "sweep", "verify"] {
        let out = bin(&[cmd, "--help"]);
        assert!(out.status.success(), "{cmd}");
        let text = String::from_utf8_lossy(&out.stdout);
        assert!(text.contains("--out") && text.contains("--config"), "{cmd}");
    }
}

#[test]
fn fig1_endpoints_round_trip() {
    let out = bin(&["fig1"]);
    assert!(out.status.success());
    let t = CsvTable::parse(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(t.len(), 41);
    for row in [&t.rows()[0], &t.rows()[40]] {
        for m in 1..=4u32 {
            let direct = berry_vacuum(&JcmParams::with_detuning(m, row[0], 1.0).unwrap()).unwrap().gamma;
            assert_eq!(row[m as usize], direct);
        }
    }
}

#[test]
fn fig4_examples_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("fig4.csv");
    let p = path.to_str().unwrap();
    assert!(bin(&["fig4", "--out", p]).status.success());
    let first = std::fs::read_to_string(&path).unwrap();
    assert!(bin(&["fig4", "--out", p]).status.success());
    assert_eq!(strip_timestamp(&first), strip_timestamp(&std::fs::read_to_string(&path).unwrap()));

    let t = table(&path);
    assert_eq!(t.columns(), ["xi", "p2_no_berry", "p2_berry", "p2_dissipative"]);
    assert_eq!(t.len(), 401);
    assert!(t.column("p2_no_berry").unwrap()[0].abs() < 1e-15);
    assert!((t.column("p2_berry").unwrap()[0] - 0.146447).abs() < 1e-6);
}

#[test]
fn gamma_units_change_the_decay() {
    let ord = bin(&["sweep", "--variable", "gamma_decay", "--min", "0", "--max", "1", "--points", "2"]);
    let ang = bin(&[
        "sweep", "--variable", "gamma_decay", "--min", "0", "--max", "1", "--points", "2",
        "--gamma-units", "angular",
    ]);
    let shift = |o: &Output| {
        CsvTable::parse(&String::from_utf8_lossy(&o.stdout)).unwrap().column("gamma_shift").unwrap()[1]
    };
    // the shift is quadratic in Γ, and 2π·10³ vs 10³ rad/s differ by 2π
    let ratio = shift(&ord) / shift(&ang);
    assert!((ratio - (2.0 * PI).powi(2)).abs() < 1e-3 * ratio, "{ratio}");
}

#[test]
fn config_file_then_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("berry.cfg");
    std::fs::write(&cfg, "m = 3\nmethod = vacuum\ndelta_over_lambda = 7\n").unwrap();
    let out = bin(&["berry", "--config", cfg.to_str().unwrap(), "--delta-over-lambda", "0"]);
    assert!(out.status.success());
    let t = CsvTable::parse(&String::from_utf8_lossy(&out.stdout)).unwrap();
    assert_eq!(t.column("m").unwrap()[0], 3.0);
    assert_eq!(t.column("gamma").unwrap()[0], 3.0 * PI);
}

#[test]
fn exit_statuses() {
    assert_eq!(bin(&["fig1", "--delta-min", "1", "--delta-max", "1"]).status.code(), Some(2));
    assert_eq!(bin(&["nope"]).status.code(), Some(2));
    assert_eq!(bin(&["verify", "--suite", "everything"]).status.code(), Some(2));
    assert_eq!(bin(&["fig4", "--preset", "unknown"]).status.code(), Some(2));
    let err = bin(&["fig1", "--out", "/no/such/dir/fig1.csv"]);
    assert_eq!(err.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&err.stderr).contains("/no/such/dir/fig1.csv"));
    // the loop is far too fast to follow the dressed state
    let fast = bin(&["berry", "--method", "adiabatic", "--delta-over-lambda", "1", "--lambda-t", "2", "--steps", "4000"]);
    assert_eq!(fast.status.code(), Some(3));
}

#[test]
fn verify_reports_rows_and_status() {
    let out = bin(&["verify", "--suite", "dissipative"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("name,value,reference,tolerance,pass"));
    let rows: Vec<&str> = lines.collect();
    assert!(rows.iter().any(|r| r.starts_with("dissipative.printed_coefficient_resonance") && r.ends_with(",info")));
    assert!(rows.iter().all(|r| !r.ends_with(",false")));
}

#[test]
fn raman_validate_runs_short() {
    let out = bin(&["raman-validate", "--t-final-ms", "0.05"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let t = CsvTable::parse(&String::from_utf8_lossy(&out.stdout)).unwrap();
    let f = t.column("fidelity").unwrap();
    assert!(f.iter().all(|v| (0.0..=1.0).contains(v)));
    assert!(t.provenance().iter().any(|(k, v)| k == "flagged" && v == "true"));
}
