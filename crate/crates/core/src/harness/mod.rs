//! Scenario files in, reports out: parsing, orchestration across the
//! trajectory, prediction and logic modules, and CSV / JSON emission.

mod report;
mod run;
mod scenario;

use thiserror::Error;

pub use report::{
    emit_report, write_report, CheckRecord, LogicRecord, PredictionSummary, Report, ReportFormat, StepRecord,
    TrajectorySummary, CSV_HEADER,
};
pub use run::run_experiment;
pub use scenario::{parse_scenario, parse_scenario_str, LogicItem, Payload, Scenario, ScenarioKind, TrajectoryRule};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{origin}: parse error at line {line}, position {column}: {message}")]
    Parse { origin: String, line: usize, column: usize, message: String },
    #[error("scenario {scenario}: invalid: {message}")]
    Validation { scenario: String, message: String },
    #[error("scenario {scenario}: {message}")]
    Run { scenario: String, message: String },
    #[error("scenario {scenario} is a {found} scenario, this command expects {expected}")]
    KindMismatch { scenario: String, expected: ScenarioKind, found: ScenarioKind },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trajectory_report(n_max: usize) -> Report {
        let text = format!(
            r#"{{ "name": "u", "kind": "trajectory", "seed": 3, "n_max": {n_max}, "epsilon": 0.1,
                 "payload": {{ "measure": {{ "uniform": 5 }}, "rule": {{ "difficulty_threshold": [1, 2, 3, 4, 5] }} }} }}"#
        );
        run_experiment(&parse_scenario_str(&text, "t").unwrap()).unwrap()
    }

    #[test]
    fn csv_layout() {
        let csv = String::from_utf8(emit_report(&trajectory_report(5), ReportFormat::Csv).unwrap()).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "n,utility,delta,tau,bound_lhs,bound_rhs,slack,pass");
        assert_eq!(lines.len(), 6);
        assert_eq!(lines[1], "1,0.2,0.2,,,,,");
        assert_eq!(lines[5], "5,1,,,,,,");
    }

    #[test]
    fn empty_report_is_header_only() {
        let mut report = trajectory_report(2);
        report.steps.clear();
        let csv = emit_report(&report, ReportFormat::Csv).unwrap();
        assert_eq!(csv, b"n,utility,delta,tau,bound_lhs,bound_rhs,slack,pass\n");
    }

    #[test]
    fn structured_round_trip() {
        let report = trajectory_report(5);
        let bytes = emit_report(&report, ReportFormat::Structured).unwrap();
        let back: Report = serde_json::from_slice(&bytes).unwrap();
        assert_eq!(back, report);
    }

    #[test]
    fn unwritable_destination() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("missing").join("r.csv");
        let err = write_report(&trajectory_report(2), ReportFormat::Csv, &path).unwrap_err();
        assert!(matches!(err, HarnessError::Io { .. }));
    }
}
