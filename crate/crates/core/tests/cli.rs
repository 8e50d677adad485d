//! End-to-end runs of the `walkhull` binary.

use std::process::{Command, Output};

use walkhull::cli::config::{Format, RunConfig};
use walkhull::cli::output::{parse_csv, Report};

fn walkhull(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_walkhull")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn report(out: &Output) -> Report {
    serde_json::from_slice(&out.stdout).expect("stdout is a JSON report")
}

#[test]
fn json_report_round_trips() {
    let out = walkhull(&["stats", "--d", "2", "--lengths", "2,1", "--origin"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let rep = report(&out);
    assert_eq!(rep.config.command, "stats");
    assert_eq!(rep.config.lengths, Some(vec![2, 1]));
    let again = serde_json::to_string_pretty(&rep).unwrap() + "\n";
    assert_eq!(again.as_bytes(), out.stdout.as_slice());
    let cfg: RunConfig = serde_json::from_value(serde_json::to_value(&rep.config).unwrap()).unwrap();
    assert_eq!(cfg, rep.config);
}

#[test]
fn csv_and_json_carry_identical_numbers() {
    let args = ["facet-prob", "--d", "2", "--lengths", "3,2", "--origin", "--spec", "all"];
    let json = walkhull(&args);
    let csv = walkhull(&[&args[..], &["--format", "csv"]].concat());
    assert_eq!(code(&json), 0);
    assert_eq!(code(&csv), 0);
    let rep = report(&json);
    let rows = parse_csv(&String::from_utf8(csv.stdout).unwrap()).unwrap();
    let from_json: Vec<(String, String, String)> = rep
        .results
        .iter()
        .flat_map(|r| r.fields.iter().map(move |(k, v)| (r.name.clone(), k.clone(), v.clone())))
        .collect();
    assert_eq!(rows, from_json);
    assert!(rows.len() > 20);
}

#[test]
fn csv_header_echoes_config() {
    let out = walkhull(&["polytope", "--m", "4", "--d", "2", "--format", "csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let first = text.lines().next().unwrap();
    let cfg: RunConfig = serde_json::from_str(first.strip_prefix("# config ").unwrap()).unwrap();
    assert_eq!(cfg.m, Some(4));
    assert_eq!(cfg.format, Format::Csv);
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    std::fs::write(&path, "d = 3\nlengths = \"1,1,1\"\norigin = true\nseed = 5\nsamples = 500\n").unwrap();
    let out = walkhull(&["simulate", "--config", path.to_str().unwrap(), "--d", "2", "--kind", "facets"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let rep = report(&out);
    assert_eq!(rep.config.d, Some(2));
    assert_eq!(rep.config.seed, 5);
    assert_eq!(rep.config.samples, 500);
    assert!(rep.config.origin);
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.json");
    let out = walkhull(&["persistence", "--n-max", "4", "--r=-1,0", "--out", path.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    assert!(out.stdout.is_empty());
    let rep: Report = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(rep.results.len(), 8);
    let p3 = rep.results.iter().find(|r| r.name == "n=3 r=0").unwrap();
    assert_eq!(p3.get("p"), Some("0.312500000000000"));
}

#[test]
fn simulation_is_deterministic_for_seed_and_workers() {
    let args = ["simulate", "--d", "2", "--lengths", "3,2", "--samples", "2000", "--seed", "11", "--workers", "3"];
    let a = walkhull(&args);
    let b = walkhull(&args);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    let c = walkhull(&[&args[..7], &["--seed", "12", "--workers", "3"]].concat());
    assert_ne!(report(&a).results, report(&c).results);
}

#[test]
fn verify_passes_for_correct_formulas() {
    let out = walkhull(&["verify", "--d", "2", "--lengths", "2,2", "--origin", "--samples", "20000", "--seed", "3"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    let rep = report(&out);
    assert!(rep.results.iter().all(|r| r.get("pass") == Some("true")));
    let names: Vec<&str> = rep.results.iter().map(|r| r.name.as_str()).collect();
    assert_eq!(names, ["facets", "origin-facets", "surface", "volume", "origin-absorbed"]);
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(code(&walkhull(&["stats", "--lengths", "2"])), 1);
    assert_eq!(code(&walkhull(&["facet-prob", "--d", "2", "--lengths", "3,2", "--spec", "1,2,3;1"])), 1);
    assert_eq!(code(&walkhull(&["stats", "--d", "2", "--lengths", "2", "--kind", "bogus"])), 1);
    assert_eq!(code(&walkhull(&["simulate", "--d", "2", "--lengths", "2", "--samples", "10"])), 1);
    assert_eq!(code(&walkhull(&["verify", "--d", "2", "--lengths", "2", "--dist", "uniform", "--kind", "volume"])), 1);
    assert_eq!(code(&walkhull(&["nonsense"])), 1);
    assert_eq!(code(&walkhull(&["--help"])), 0);
}

#[test]
fn degenerate_ensemble_exits_three() {
    let out = walkhull(&["stats", "--d", "3", "--lengths", "1,1"]);
    assert_eq!(code(&out), 3);
    let rep = report(&out);
    assert_eq!(rep.exit_code, 3);
    assert!(!rep.warnings.is_empty());
}

#[test]
fn single_walk_reports_display_gap() {
    let out = walkhull(&["single-walk", "--n", "2", "--d", "1"]);
    assert_eq!(code(&out), 0);
    let rep = report(&out);
    let vol = rep.results.iter().find(|r| r.name == "volume").unwrap();
    assert_eq!(vol.get("display"), Some("1.00000000000000"));
    assert_eq!(vol.get("value"), Some("0.797884560802866"));
}
