use std::fs;
use std::process::{Command, Output};

use serde_json::Value;

fn bench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spectator-bench"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn shifts_from_device_agree_with_oracle() {
    let v = json(&bench(&["shifts", "--gate", "Q4", "--spectator", "Q1"]));
    let p = v["perturbative"]["zeta1"].as_f64().unwrap();
    let e = v["exact"]["zeta1"].as_f64().unwrap();
    assert!((p + 0.133).abs() < 0.002, "{p}");
    assert!((p - e).abs() < 0.15 * e.abs());
}

#[test]
fn shifts_report_pole() {
    let v = json(&bench(&["shifts", "--delta", "-300", "--j", "4.5"]));
    assert_eq!(v["perturbative"]["diverged"], Value::Bool(true));
}

#[test]
fn tomo_reports_process_error() {
    let v = json(&bench(&["tomo", "--d1", "10.5", "--dc", "-2.94", "--repeat", "3"]));
    let eps = v["eps_cz"].as_f64().unwrap();
    assert!((eps - 0.0065239).abs() < 1e-6);
    assert!((v["chi_trace"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert!(v["repeated"]["ratio"].as_f64().unwrap() > 8.0);
}

#[test]
fn ramsey_is_seeded() {
    let args = ["--seed", "3", "ramsey", "--phi-c", "-6.3", "--shots", "33000"];
    let a = bench(&args);
    let b = bench(&args);
    assert_eq!(a.stdout, b.stdout);
    let v = json(&a);
    assert!((v["difference_deg"].as_f64().unwrap() - 173.7).abs() < 1.0);
    let se = v["stderr_deg"].as_f64().unwrap();
    assert!(se > 0.1 && se < 0.3, "{se}");
}

#[test]
fn budget_table_has_one_row_per_configuration() {
    let out = bench(&["budget"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 1 + 8);
    assert!(lines[0].starts_with("config,zeta1_tot_mhz"));
    assert!(lines[5].starts_with("100,"));
}

#[test]
fn empty_spectator_list_clears_default() {
    let out = bench(&["budget", "--g1", "Q4", "--g2", "Q1", "--s1", "", "--s2", "Q3"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert!(text.lines().next().unwrap().contains("d_phi_s_Q3_deg"));
}

#[test]
fn sweep_flags_pole_with_empty_values() {
    let out = bench(&[
        "sweep", "--spectator", "Q1", "--start", "285", "--stop", "293", "--points", "5",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let flagged = text.lines().find(|l| l.starts_with("2.89000000e2")).unwrap();
    let cells: Vec<&str> = flagged.split(',').collect();
    assert!(cells[1..9].iter().all(|c| c.is_empty()), "{flagged}");
    assert_eq!(cells[9], "true");
}

#[test]
fn figures_are_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let out = bench(&["--out", dir.path().to_str().unwrap(), "--format", "both", "fig", "fig4"]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    for name in ["fig4.csv", "fig4_curve.csv", "fig4.svg"] {
        let x = fs::read(a.path().join(name)).unwrap();
        let y = fs::read(b.path().join(name)).unwrap();
        assert_eq!(x, y, "{name}");
    }
    let svg = fs::read_to_string(a.path().join("fig4.svg")).unwrap();
    assert!(svg.starts_with("<svg"));
}

#[test]
fn svg_only_format() {
    let dir = tempfile::tempdir().unwrap();
    let out = bench(&["--out", dir.path().to_str().unwrap(), "--format", "svg", "fig", "fig1c"]);
    assert!(out.status.success());
    assert!(dir.path().join("fig1c.svg").exists());
    assert!(!dir.path().join("fig1c.csv").exists());
}

#[test]
fn simulate_two_level_matches_formula() {
    let v = json(&bench(&["simulate", "--delta", "1.0"]));
    let got = v["d_phi_c_deg"].as_f64().unwrap();
    let want = v["d_phi_c_predicted_deg"].as_f64().unwrap();
    assert!((got - want).abs() < 0.02 * want.abs());
    assert!(v["norm_drift"].as_f64().unwrap() < 1e-9);
}

#[test]
fn simulate_writes_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let out = bench(&["--out", dir.path().to_str().unwrap(), "simulate", "--trajectory", "200"]);
    assert!(out.status.success());
    let csv = fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    assert!(csv.starts_with("t_ns,re_11,im_11,re_02,im_02"));
}

#[test]
fn exit_code_usage() {
    assert_eq!(bench(&["nonsense"]).status.code(), Some(1));
    assert_eq!(bench(&["fig", "fig9"]).status.code(), Some(1));
    assert_eq!(bench(&["ramsey", "--contrast", "1.5"]).status.code(), Some(1));
    assert_eq!(bench(&["--help"]).status.code(), Some(0));
}

#[test]
fn exit_code_validation() {
    let out = bench(&["sweep", "--start", "1", "--stop", "1"]);
    assert_eq!(out.status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("dev.json");
    fs::write(
        &path,
        r#"{"qubits":[{"id":"A","freq_mhz":5.1,"anh_mhz":-300}],"couplings":[]}"#,
    )
    .unwrap();
    let out = bench(&["--device", path.to_str().unwrap(), "budget", "--g1", "A", "--g2", "B"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("qubits[0].freq_mhz"), "{err}");
}

#[test]
fn exit_code_numerical() {
    // Every point within pole_eps of the Q1 |11>-|02> pole at 289 MHz.
    let out = bench(&[
        "--pole-eps", "5", "sweep", "--spectator", "Q1", "--start", "287", "--stop", "291", "--points", "3",
    ]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}
