//! End-to-end tests of the `levyheat` binary and the bundled scenarios.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_levyheat"))
}

fn scenarios() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn stable_interval_scenario_passes_and_writes_outputs() {
    let out = tempfile::tempdir().unwrap();
    let file = scenarios().join("stable15_interval.toml");
    let o = run(&["--no-cache", "--out", out.path().to_str().unwrap(), "run", file.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}{}", stdout(&o), stderr(&o));
    assert!(stdout(&o).contains("verdict    PASS"));
    let dir = out.path().join("stable15_interval");
    for f in ["sweep.csv", "report_quadrature.csv", "summary.txt"] {
        assert!(dir.join(f).is_file(), "missing {f}");
    }
    let report = fs::read_to_string(dir.join("report_quadrature.csv")).unwrap();
    assert!(report.starts_with("t,scale,scaled_value,limit,error,error_mode,stderr"));
    assert_eq!(report.lines().count(), 10);
}

#[test]
fn tight_tolerance_override_turns_the_verdict_to_fail() {
    let out = tempfile::tempdir().unwrap();
    let file = scenarios().join("stable15_interval.toml");
    let o = run(&[
        "--no-cache",
        "--tolerance-override",
        "1e-6",
        "--out",
        out.path().to_str().unwrap(),
        "run",
        file.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", stdout(&o));
    assert!(stdout(&o).contains("verdict    FAIL"));
}

#[test]
fn invalid_scenario_reports_the_line_and_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let src = fs::read_to_string(scenarios().join("stable15_interval.toml")).unwrap();
    let bad = src.replace("alpha = 1.5", "alpha = 1.5\nalpah = 2.0");
    let line = bad.lines().position(|l| l.starts_with("alpah")).unwrap() + 1;
    let path = dir.path().join("bad.toml");
    fs::write(&path, bad).unwrap();
    let o = run(&["validate", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let msg = stderr(&o);
    assert!(msg.contains(&format!("line {line}")), "{msg}");
    assert!(msg.contains("alpah"), "{msg}");
}

#[test]
fn hypothesis_violations_are_caught_before_running() {
    let dir = tempfile::tempdir().unwrap();
    let src = fs::read_to_string(scenarios().join("t1_case1_stable05.toml")).unwrap();
    let path = dir.path().join("wrong_law.toml");
    fs::write(&path, src.replace("alpha = 0.5", "alpha = 1.5")).unwrap();
    let o = run(&["validate", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("hypothesis"), "{}", stderr(&o));
}

#[test]
fn corpus_with_a_broken_file_records_an_error_row() {
    let dir = tempfile::tempdir().unwrap();
    let out = tempfile::tempdir().unwrap();
    fs::copy(scenarios().join("brownian_square.toml"), dir.path().join("a.toml")).unwrap();
    fs::write(dir.path().join("b.toml"), "[process]\nfamily = \"teleport\"\n").unwrap();
    let o = run(&["--no-cache", "--out", out.path().to_str().unwrap(), "corpus", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let summary = fs::read_to_string(out.path().join("corpus_summary.csv")).unwrap();
    let rows: Vec<&str> = summary.lines().collect();
    assert_eq!(rows.len(), 3, "{summary}");
    assert!(rows[1].starts_with("a.toml,") && rows[1].contains(",PASS,"));
    assert!(rows[2].starts_with("b.toml,") && rows[2].contains(",ERROR,"));
}

#[test]
fn empty_corpus_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let out = tempfile::tempdir().unwrap();
    let o = run(&["--out", out.path().to_str().unwrap(), "corpus", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let summary = fs::read_to_string(out.path().join("corpus_summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 1);
}

#[test]
fn bundled_corpus_verdicts() {
    let out = tempfile::tempdir().unwrap();
    let o = run(&["--no-cache", "--out", out.path().to_str().unwrap(), "corpus", scenarios().to_str().unwrap()]);
    // The two axis-concentrated examples disagree with their stated constants.
    assert_eq!(o.status.code(), Some(2), "{}", stdout(&o));
    let summary = fs::read_to_string(out.path().join("corpus_summary.csv")).unwrap();
    let mut rdr = csv::Reader::from_reader(summary.as_bytes());
    let mut seen = 0;
    for rec in rdr.records() {
        let rec = rec.unwrap();
        let (file, verdict) = (&rec[0], &rec[9]);
        let expected = if file.starts_with("ex5_") { "FAIL" } else { "PASS" };
        assert_eq!(verdict, expected, "{file}: {}", &rec[10]);
        seen += 1;
    }
    assert_eq!(seen, 12);
}

#[test]
fn monte_carlo_runs_are_reproducible_under_a_seed() {
    let file = scenarios().join("ex2_case1_disjoint.toml");
    let outputs: Vec<String> = (0..2)
        .map(|_| {
            let out = tempfile::tempdir().unwrap();
            let o = run(&["--seed", "99", "--out", out.path().to_str().unwrap(), "run", file.to_str().unwrap()]);
            assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
            fs::read_to_string(out.path().join("ex2_case1_disjoint/sweep.csv")).unwrap()
        })
        .collect();
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn plotdata_series() {
    let out = tempfile::tempdir().unwrap();
    let file = scenarios().join("t1_case1_stable05.toml");
    let o = run(&["--no-cache", "--out", out.path().to_str().unwrap(), "run", file.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let report = out.path().join("t1_case1_stable05/report_quadrature.csv");
    let plot = out.path().join("plot.csv");
    let o = run(&["plotdata", report.to_str().unwrap(), "-o", plot.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = fs::read_to_string(plot).unwrap();
    assert!(text.starts_with("series,x,y,limit"));
    assert_eq!(text.lines().filter(|l| l.starts_with("log10_rel_error,")).count(), 5);
    assert_eq!(text.lines().filter(|l| l.starts_with("scaled,")).count(), 5);
}
