//! Command-line behaviour: exit codes, report contents, round-trips, CSV.

use std::process::Command;

use oddwalk::contingency::{self, Margins};
use oddwalk::report::AnalysisReport;
use oddwalk::{analysis, switch, AnalysisOptions};

fn margins(rows: &str, cols: &str) -> Margins {
    Margins::parse(rows, cols).unwrap()
}

#[test]
fn smallest_switch_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out.json");
    let status = Command::new(env!("CARGO_BIN_EXE_oddwalk"))
        .args(["switch", "--n", "4", "--d", "1", "--report"])
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let report: AnalysisReport = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report.descriptor.states, 3);
    assert!(report.spectrum.lambda_min.abs() < 1e-12);
    assert_eq!(report.walks.eta, "3/1");
    assert!(report.checks["lemma1"].is_pass());
}

#[test]
fn contingency_walk_lengths_are_three_and_five() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out.json");
    let status = Command::new(env!("CARGO_BIN_EXE_oddwalk"))
        .args(["contingency", "--rows", "2,2,2", "--cols", "2,2,2", "--report"])
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let report: AnalysisReport = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let lengths: Vec<usize> = report.walks.length_histogram.keys().copied().collect();
    assert_eq!(lengths, vec![3, 5]);
}

#[test]
fn perfect_matching_host_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let pm = dir.path().join("pm.txt");
    std::fs::write(&pm, "4 2\n1 2\n3 4\n").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_oddwalk"))
        .args(["matchings", "--graph"])
        .arg(&pm)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("perfect matching"), "{stderr}");
}

#[test]
fn usage_errors_exit_two() {
    for args in [
        vec!["switch", "--n", "4"],
        vec!["switch", "--n", "5", "--d", "3"],
        vec!["contingency", "--rows", "2,x", "--cols", "1,1"],
        vec!["switch", "--n", "4", "--d", "1", "--eps", "1.5"],
        vec!["frobnicate"],
    ] {
        let status = Command::new(env!("CARGO_BIN_EXE_oddwalk")).args(&args).output().unwrap().status;
        assert_eq!(status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn json_round_trip_is_exact() {
    let opts = AnalysisOptions {
        exact_mixing: true,
        lazy: true,
        ..AnalysisOptions::default()
    };
    let reports = [
        switch::switch_analysis(5, 2, &opts).unwrap(),
        contingency::contingency_analysis(&margins("2,1,1", "2,1,1"), &opts).unwrap(),
    ];
    for r in reports {
        let text = serde_json::to_string(&r).unwrap();
        let back: AnalysisReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back, r);
        assert_eq!(serde_json::to_string(&back).unwrap(), text);
    }
    let sweep = analysis::random_sweep(8, 3, 5, &opts).unwrap();
    let text = serde_json::to_string(&sweep).unwrap();
    assert_eq!(serde_json::from_str::<oddwalk::RandomSweepReport>(&text).unwrap(), sweep);
}

#[test]
fn csv_has_fixed_columns() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("out.csv");
    let status = Command::new(env!("CARGO_BIN_EXE_oddwalk"))
        .args(["random", "--states", "6", "--trials", "3", "--seed", "7", "--exact-mixing", "--csv"])
        .arg(&csv)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "family,params,N,lambda1,lambda_min,eta_num,eta_den,lemma1_pass,\
         eq1_bound_eps25,tau_exact_eps25,eq1_bound_eps01,tau_exact_eps01"
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r.starts_with("custom,") && r.split(',').nth(7) == Some("true")));
}
