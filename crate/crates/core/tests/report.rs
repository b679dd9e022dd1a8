use std::time::{Duration, Instant};

use num_complex::Complex64;

use specweight_core::dixmier::{estimate_trace, DixmierOptions};
use specweight_core::hypertrace::Overall;
use specweight_core::report::{emit_series, parse_config, run_analyze, Series, SeriesFormat, TauberOutcome};
use specweight_core::tauberian::partition_scan;
use specweight_core::zeta::{riemann_zeta_ref, zeta_eval};
use specweight_core::{generate, AnalysisConfig, AnalysisReport, Error, GeneratorSpec, Schedule};

fn roundtrips(report: &AnalysisReport) {
    let text = report.to_json();
    let back: AnalysisReport = serde_json::from_str(&text).unwrap();
    assert_eq!(back.to_json(), text);
}

#[test]
fn naturals_report() {
    let config = parse_config(r#"{"spec": {"kind": "naturals"}, "analyses": "all"}"#).unwrap();
    let r = run_analyze(&config).unwrap();
    assert!(r.errors.is_empty(), "{:?}", r.errors);
    assert!((r.dixmier.as_ref().unwrap().value - 1.0).abs() < 0.01);
    assert!((r.zeta.as_ref().unwrap().residue - 1.0).abs() < 1e-6);
    assert_eq!(r.hypertrace.as_ref().unwrap().overall, Overall::HypothesesHold);
    assert!(r.cross_checks.dixmier_vs_zeta_residue_delta.unwrap().abs() < 0.01);
    roundtrips(&r);
}

#[test]
fn free_group_report() {
    let r = run_analyze(&AnalysisConfig::new(GeneratorSpec::FreeGroup { p: 2 })).unwrap();
    let prediction = r.dixmier.as_ref().unwrap().prediction.unwrap();
    assert!((prediction.value - 0.606827).abs() < 1e-6);
    assert!(matches!(r.tauber, Some(TauberOutcome::NotNuclear { .. })));
    assert_eq!(r.hypertrace.as_ref().unwrap().overall, Overall::HypothesesFail);
    assert!((r.zeta.as_ref().unwrap().residue - 0.606826151084558).abs() < 1e-7);
    roundtrips(&r);
}

#[test]
fn every_builtin_generator_finishes_quickly() {
    for g in [
        GeneratorSpec::Naturals,
        GeneratorSpec::Primes { limit: 10_000_000 },
        GeneratorSpec::FreeGroup { p: 2 },
        GeneratorSpec::Torus2,
        GeneratorSpec::WeylPower { c: 1.0, gamma: 2.0 },
        GeneratorSpec::LogWeyl,
        GeneratorSpec::FractalLaw { c: 1.0, d_s: 1.5 },
        GeneratorSpec::Geometric { c: 2.0 },
    ] {
        let start = Instant::now();
        let r = run_analyze(&AnalysisConfig::new(g.clone())).unwrap();
        assert!(
            start.elapsed() < Duration::from_secs(10),
            "{}: {:?}",
            g.kind(),
            start.elapsed()
        );
        roundtrips(&r);
    }
}

#[test]
fn section_failures_do_not_abort() {
    let r = run_analyze(&AnalysisConfig::new(GeneratorSpec::Explicit {
        pairs: vec![(1.0, 1), (2.0, 3)],
    }))
    .unwrap();
    assert!(r.errors.contains_key(&specweight_core::report::Section::Hypertrace));
    assert_eq!(r.zeta.as_ref().unwrap().residue, 0.0);
    roundtrips(&r);
}

#[test]
fn unknown_generator_kind_is_a_config_error() {
    assert!(matches!(
        parse_config(r#"{"spec": {"kind": "sphere"}}"#),
        Err(Error::Config { .. })
    ));
    assert!(matches!(
        parse_config(r#"{"spec": {"kind": "naturals"}, "extra": 1}"#),
        Err(Error::Config { .. })
    ));
}

#[test]
fn dixmier_csv_has_one_row_per_point() {
    let spec = generate(&GeneratorSpec::Naturals).unwrap();
    let n = (0..10).map(|j| 100 * 4u64.pow(j)).collect();
    let est = estimate_trace(&spec, &Schedule::Points { n }, &DixmierOptions::default()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("dixmier.csv");
    emit_series(&Series::Dixmier(est.samples), &path, SeriesFormat::Csv).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 11);
    assert_eq!(lines[0], "N,S_N,cesaro");
    assert!(lines[1].starts_with("100,"));
}

#[test]
fn zeta_scan_csv_matches_reference() {
    let spec = generate(&GeneratorSpec::Naturals).unwrap();
    let values = (1..=10)
        .map(|i| zeta_eval(&spec, Complex64::new(1.0 + i as f64 / 10.0, 0.0), 1e-12).unwrap())
        .collect();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("zeta.csv");
    emit_series(&Series::Zeta(values), &path, SeriesFormat::Csv).unwrap();
    let mut reader = csv::Reader::from_path(&path).unwrap();
    assert_eq!(reader.headers().unwrap(), vec!["s", "re", "im", "tail_bound"]);
    let mut rows = 0;
    for record in reader.records() {
        let record = record.unwrap();
        let s: f64 = record[0].parse().unwrap();
        let re: f64 = record[1].parse().unwrap();
        let want = riemann_zeta_ref(Complex64::new(s, 0.0)).unwrap().re;
        assert!((re - want).abs() < 1e-10 * want);
        rows += 1;
    }
    assert_eq!(rows, 10);
}

#[test]
fn partition_json_series() {
    let spec = generate(&GeneratorSpec::Naturals).unwrap();
    let samples = partition_scan(&spec, &[0.1, 0.01], 1e-12).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("z.json");
    emit_series(&Series::Partition(samples), &path, SeriesFormat::Json).unwrap();
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 2);
    assert_eq!(v[1]["beta"], 0.01);
    assert!(v[0]["Z"].as_f64().unwrap() > 9.0);
}

#[test]
fn unwritable_path_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("missing").join("out.csv");
    let err = emit_series(&Series::Zeta(vec![]), &path, SeriesFormat::Csv).unwrap_err();
    assert!(matches!(err, Error::Io { .. }), "{err:?}");
}
