mod common;

use std::path::Path;
use std::process::Command;

use common::{ex2, phi, run};
use delay_etc::export::{emit_plot_data, read_trace_file};
use delay_etc::harness::{run_experiment, ExperimentConfig, RunOptions};
use delay_etc::{count_events, Error, TriggerMode, TriggerParams};

const EXAMPLE1: &str = include_str!("../configs/example1.toml");
const EXAMPLE2: &str = include_str!("../configs/example2.toml");

fn opts(dir: &Path) -> RunOptions {
    RunOptions { out_dir: Some(dir.to_path_buf()), include_initial_event: false }
}

fn cli() -> Command {
    Command::new(env!("CARGO_BIN_EXE_delay-etc"))
}

fn write_config(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn empty_initial_list_is_rejected_by_name() {
    let text = EXAMPLE2.replace("initial = [[0.2]]", "initial = []");
    match ExperimentConfig::from_toml_str(&text) {
        Err(Error::Config { field, .. }) => assert_eq!(field, "initial"),
        other => panic!("expected a config error, got {other:?}"),
    }
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), "bad.toml", &text);
    let status = cli().arg("simulate").arg(&path).output().unwrap().status;
    assert_eq!(status.code(), Some(1));
}

#[test]
fn mismatched_initial_dimension_names_the_entry() {
    let text = EXAMPLE1.replace("[-2.0, 3.0]]", "[-2.0]]");
    match ExperimentConfig::from_toml_str(&text) {
        Err(Error::Config { field, .. }) => assert_eq!(field, "initial[1]"),
        other => panic!("expected a config error, got {other:?}"),
    }
}

#[test]
fn example1_summary_matches_reference_count() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::from_toml_str(EXAMPLE1).unwrap();
    let summary = run_experiment(&cfg, &opts(dir.path())).unwrap();
    let first = &summary.runs[0];
    assert_eq!(first.initial, vec![1.0, 1.0]);
    assert!((first.event_count as f64 - 2135.0).abs() <= 0.05 * 2135.0);
    assert_eq!(first.event_count_incl, first.event_count_excl + 1);
    assert!(summary.linear_feasibility.as_ref().unwrap().holds);
    assert!(summary.runs.iter().all(|r| r.nontrivial_certified && r.violations.is_empty()));
    assert!(summary.runs.iter().all(|r| r.bound_margin.unwrap() >= -1e-9));
}

#[test]
fn example2_short_horizon_has_no_violations() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::from_toml_str(EXAMPLE2).unwrap();
    let summary = run_experiment(&cfg, &opts(dir.path())).unwrap();
    let short = summary.runs.iter().find(|r| r.horizon == 200).unwrap();
    assert!(short.min_gap.unwrap() >= 2);
    assert!(short.violations.is_empty());
    assert!(!summary.certified_violation());
}

#[test]
fn summary_counts_agree_with_written_traces() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::from_toml_str(EXAMPLE2).unwrap();
    let summary = run_experiment(&cfg, &opts(dir.path())).unwrap();
    for r in &summary.runs {
        let trace = read_trace_file(r.trace_csv.as_ref().unwrap()).unwrap();
        assert_eq!(trace.rows.len(), r.horizon + 1);
        assert_eq!(count_events(&trace, r.horizon, false), r.event_count_excl);
        assert_eq!(count_events(&trace, r.horizon, true), r.event_count_incl);
    }
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::from_toml_str(EXAMPLE1).unwrap();
    let read_all = || {
        let mut files: Vec<_> = walk(dir.path());
        files.sort();
        files.into_iter().map(|p| (p.clone(), std::fs::read(p).unwrap())).collect::<Vec<_>>()
    };
    run_experiment(&cfg, &opts(dir.path())).unwrap();
    let first = read_all();
    run_experiment(&cfg, &opts(dir.path())).unwrap();
    assert_eq!(first, read_all());
    assert_eq!(first.len(), 3);
}

fn walk(dir: &Path) -> Vec<std::path::PathBuf> {
    std::fs::read_dir(dir)
        .unwrap()
        .flat_map(|e| {
            let p = e.unwrap().path();
            if p.is_dir() {
                walk(&p)
            } else {
                vec![p]
            }
        })
        .collect()
}

#[test]
fn plot_data_error_stays_below_threshold_off_events() {
    let (sys, cert, _) = ex2();
    let trace = run(&sys, &cert, TriggerParams::full(0.05, 2.2, 0.02).unwrap(), phi(&[0.2]), 200);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("plot/ex2.csv");
    emit_plot_data(&trace, &path).unwrap();
    let mut reader = csv::Reader::from_path(&path).unwrap();
    let headers = reader.headers().unwrap().clone();
    assert_eq!(headers.iter().take(4).collect::<Vec<_>>(), ["k", "e_norm", "threshold", "is_event"]);
    let mut rows = 0;
    for rec in reader.records() {
        let rec = rec.unwrap();
        let e: f64 = rec[1].parse().unwrap();
        let th: f64 = rec[2].parse().unwrap();
        if &rec[3] == "0" {
            assert!(e <= th, "k = {}", &rec[0]);
        }
        rows += 1;
    }
    assert_eq!(rows, 201);
}

#[test]
fn state_only_mode_keeps_error_at_zero() {
    let (sys, cert, _) = ex2();
    let p = TriggerParams::new(0.05, 0.0, 0.02, TriggerMode::StateOnly).unwrap();
    let trace = run(&sys, &cert, p, phi(&[0.2]), 200);
    assert!(trace.rows.iter().all(|r| r.e_norm == 0.0));
}

#[test]
fn cli_check_reports_infeasible_linear_plant() {
    let text = EXAMPLE1.replace("K = [[-0.1621, 0.0324], [0.0810, -0.4862]]", "K = [[-1.0, 0.0], [0.0, -1.0]]");
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), "infeasible.toml", &text);
    let out = cli().arg("check").arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn cli_tune_output_is_a_certified_config() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), "ex2.toml", EXAMPLE2);
    let out = cli().arg("--out-dir").arg(dir.path()).arg("tune").arg(&path).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let tuned = ExperimentConfig::load(&dir.path().join("tuned.toml")).unwrap();
    let summary = run_experiment(&tuned, &opts(dir.path())).unwrap();
    assert!(summary.tuner.iter().all(|t| t.nontrivial_certified));
    assert!(summary.runs.iter().all(|r| r.violations.is_empty() && r.min_gap.unwrap_or(2) >= 2));
}

#[test]
fn cli_simulate_and_tables_write_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), "ex2.toml", EXAMPLE2);
    let out = cli()
        .arg("--out-dir")
        .arg(dir.path())
        .arg("--include-initial-event")
        .args(["simulate"])
        .arg(&path)
        .output()
        .unwrap();
    assert!(out.status.success());
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let run = &summary["runs"][0];
    assert_eq!(run["event_count"], run["event_count_incl"]);
    assert!(dir.path().join("example2_summary.json").exists());
    assert!(dir.path().join("traces/example2_phi0_h200.csv").exists());

    let out = cli().arg("--out-dir").arg(dir.path()).arg("tables").output().unwrap();
    assert!(out.status.success());
    let md = std::fs::read_to_string(dir.path().join("tables.md")).unwrap();
    assert!(md.contains("| 16 | 0.03 |"));
}
