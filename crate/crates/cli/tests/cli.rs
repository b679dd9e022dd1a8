use std::process::{Command, Output};

fn specweight(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_specweight"))
        .args(args)
        .env("SPECWEIGHT_THREADS", "2")
        .output()
        .expect("binary runs")
}

#[test]
fn analyze_naturals_inline() {
    let out = specweight(&["analyze", "--spec", r#"{"kind": "naturals"}"#]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["schema_version"], 1);
    assert!((report["dixmier"]["value"].as_f64().unwrap() - 1.0).abs() < 0.01);
    assert_eq!(report["hypertrace"]["overall"], "hypotheses_hold");
}

#[test]
fn analyze_config_file_to_out() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.json");
    std::fs::write(
        &config,
        r#"{"spec": {"kind": "free_group", "p": 2}, "analyses": ["dixmier", "tauber", "hypertrace"]}"#,
    )
    .unwrap();
    let report_path = dir.path().join("report.json");
    let out = specweight(&[
        "analyze",
        "--config",
        config.to_str().unwrap(),
        "--out",
        report_path.to_str().unwrap(),
        "--blocks",
        "500",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report_path).unwrap()).unwrap();
    assert_eq!(report["tauber"]["status"], "not_nuclear");
    assert_eq!(report["hypertrace"]["overall"], "hypotheses_fail");
    assert!(report["zeta"].is_null());
    let prediction = report["dixmier"]["prediction"]["value"].as_f64().unwrap();
    assert!((prediction - 0.606827).abs() < 1e-6);
}

#[test]
fn failing_sections_give_a_nonzero_exit() {
    let out = specweight(&[
        "analyze",
        "--spec",
        r#"{"kind": "explicit", "pairs": [[1.0, 2], [3.0, 1]]}"#,
    ]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("section hypertrace failed"), "{stderr}");
}

#[test]
fn unknown_kind_reports_a_location() {
    let out = specweight(&["zeta", "--spec", r#"{"kind": "sphere"}"#]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("config error at spec"), "{stderr}");
}

#[test]
fn zeta_scan_to_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("zeta.csv");
    let out = specweight(&[
        "zeta",
        "--spec",
        r#"{"kind": "naturals"}"#,
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 11);
    assert_eq!(lines[0], "s,re,im,tail_bound");
    assert!(lines[10].starts_with("2,1.644934066848"), "{}", lines[10]);
}

#[test]
fn dixmier_json_to_stdout() {
    let out = specweight(&[
        "dixmier",
        "--spec",
        r#"{"kind": "geometric", "c": 2.0}"#,
        "--schedule",
        "blocks:1:40",
        "--format",
        "json",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let rows: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(rows.as_array().unwrap().len(), 40);
    assert!(rows[0].get("S_N").is_some() && rows[0].get("cesaro").is_some());
}

#[test]
fn tauber_scan_and_hypertrace() {
    let out = specweight(&["tauber", "--spec", r#"{"kind": "naturals"}"#, "--beta-grid", "0.1,0.01"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().next(), Some("beta,Z,energy"));
    assert_eq!(text.lines().count(), 3);

    let out = specweight(&[
        "hypertrace",
        "--spec",
        r#"{"kind": "free_group", "p": 2}"#,
        "--blocks",
        "300",
    ]);
    assert!(out.status.success());
    let verdict: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(verdict["overall"], "hypotheses_fail");
}
