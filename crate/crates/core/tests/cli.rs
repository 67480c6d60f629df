use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use capgrowth::harness::{
    emit_report, parse_scenario, run_experiment, HarnessError, Report, ReportFormat, ScenarioKind,
};

fn manifest() -> &'static Path {
    Path::new(env!("CARGO_MANIFEST_DIR"))
}

fn scenarios() -> PathBuf {
    manifest().join("../../scenarios")
}

fn fixture(name: &str) -> PathBuf {
    manifest().join("tests/fixtures").join(name)
}

fn capgrowth(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_capgrowth")).args(args).output().expect("binary runs")
}

fn path_arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn csv_matches_golden_files() {
    for name in ["uniform-5", "two-bernoulli"] {
        let scenario = parse_scenario(&scenarios().join(format!("{name}.json"))).unwrap();
        let csv = emit_report(&run_experiment(&scenario).unwrap(), ReportFormat::Csv).unwrap();
        let golden = std::fs::read(manifest().join(format!("tests/golden/{name}.csv"))).unwrap();
        assert_eq!(String::from_utf8(csv).unwrap(), String::from_utf8(golden).unwrap(), "{name}");
    }
}

#[test]
fn logic_csv_is_header_only() {
    let scenario = parse_scenario(&scenarios().join("gl-schemata.json")).unwrap();
    let csv = emit_report(&run_experiment(&scenario).unwrap(), ReportFormat::Csv).unwrap();
    assert_eq!(csv, b"n,utility,delta,tau,bound_lhs,bound_rhs,slack,pass\n");
}

#[test]
fn every_bundled_scenario_round_trips() {
    for entry in std::fs::read_dir(scenarios()).unwrap() {
        let path = entry.unwrap().path();
        let report = run_experiment(&parse_scenario(&path).unwrap()).unwrap();
        assert!(report.passed, "{}", path.display());
        let bytes = emit_report(&report, ReportFormat::Structured).unwrap();
        let back: Report = serde_json::from_slice(&bytes).unwrap();
        assert_eq!(back, report, "{}", path.display());
        for check in report.checks.iter().filter(|c| c.pass) {
            assert!(check.slack >= -check.tolerance);
        }
    }
}

#[test]
fn invalid_fixtures_report_the_violated_invariant() {
    let err = parse_scenario(&fixture("kraft-bad.json")).unwrap_err();
    assert!(matches!(err, HarnessError::Validation { .. }));
    assert!(err.to_string().contains("kraft sum exceeds 1"), "{err}");

    let err = parse_scenario(&fixture("missing-seed.json")).unwrap_err();
    assert!(matches!(err, HarnessError::Validation { .. }));
    assert!(err.to_string().contains("missing field `seed`"), "{err}");

    match parse_scenario(&fixture("malformed.json")).unwrap_err() {
        HarnessError::Parse { line, column, .. } => assert_eq!((line, column), (6, 3)),
        other => panic!("expected a parse error, got {other}"),
    }

    assert!(matches!(parse_scenario(&fixture("absent.json")).unwrap_err(), HarnessError::Io { .. }));
}

#[test]
fn verify_exit_code_follows_results() {
    let ok = capgrowth(&["verify", path_arg(&scenarios())]);
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stdout));

    let dir = tempfile::tempdir().unwrap();
    std::fs::copy(scenarios().join("uniform-5.json"), dir.path().join("a.json")).unwrap();
    std::fs::copy(fixture("wrong-expectation.json"), dir.path().join("b.json")).unwrap();
    let failing = capgrowth(&["verify", path_arg(dir.path())]);
    assert_eq!(failing.status.code(), Some(1));
    let stdout = String::from_utf8(failing.stdout).unwrap();
    assert!(stdout.contains("PASS") && stdout.contains("FAIL"), "{stdout}");

    std::fs::copy(fixture("kraft-bad.json"), dir.path().join("b.json")).unwrap();
    let broken = capgrowth(&["verify", "--sequential", path_arg(dir.path())]);
    assert_eq!(broken.status.code(), Some(1));
    assert!(String::from_utf8(broken.stdout).unwrap().contains("kraft sum exceeds 1"));
}

#[test]
fn subcommands_check_scenario_kind() {
    let out = capgrowth(&["predict", path_arg(&scenarios().join("uniform-5.json"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("expects prediction"));

    let out = capgrowth(&["simulate", path_arg(&scenarios().join("geometric-20.json"))]);
    assert_eq!(out.status.code(), Some(0));
    let out = capgrowth(&["predict", path_arg(&scenarios().join("weather-contexts.json"))]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn logic_accepts_a_bare_formula() {
    let out = capgrowth(&["logic", "[]([]p0 -> p0) -> []p0"]);
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.starts_with("scenario formula") && stdout.contains("valid") && stdout.contains("[GLR]"));

    let out = capgrowth(&["logic", "[]p0 -> p0"]);
    assert!(String::from_utf8(out.stdout).unwrap().contains("countermodel"));

    let out = capgrowth(&["logic", "[]p0 ->"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn emit_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let coverage = scenarios().join("random-coverage.json");
    let emit = |seed: &str, name: &str| {
        let out = dir.path().join(name);
        let status = capgrowth(&[
            "emit",
            path_arg(&coverage),
            "--format",
            "structured",
            "--out",
            path_arg(&out),
            "--seed",
            seed,
        ]);
        assert_eq!(status.status.code(), Some(0));
        std::fs::read(out).unwrap()
    };
    let a = emit("7", "a.json");
    assert_eq!(a, emit("7", "b.json"));
    assert_ne!(a, emit("8", "c.json"));
    let report: Report = serde_json::from_slice(&a).unwrap();
    assert_eq!((report.kind, report.seed), (ScenarioKind::Trajectory, 7));

    let out = dir.path().join("short.csv");
    let status = capgrowth(&[
        "emit",
        path_arg(&scenarios().join("uniform-5.json")),
        "--format",
        "csv",
        "--out",
        path_arg(&out),
        "--n-max",
        "3",
    ]);
    assert_eq!(status.status.code(), Some(0));
    assert_eq!(std::fs::read_to_string(out).unwrap().lines().count(), 4);

    let status = capgrowth(&["simulate", path_arg(&scenarios().join("uniform-5.json")), "--epsilon", "0"]);
    assert_eq!(status.status.code(), Some(2));

    let unwritable = dir.path().join("no/such/dir/r.csv");
    let status = capgrowth(&["emit", path_arg(&coverage), "--format", "csv", "--out", path_arg(&unwritable)]);
    assert_eq!(status.status.code(), Some(2));
}
