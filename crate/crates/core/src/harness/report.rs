use std::path::Path;

use serde::{Deserialize, Serialize};

use super::scenario::ScenarioKind;
use super::HarnessError;
use crate::logic::{CountermodelRecord, ProofStep, Verdict};
use crate::prediction::{BoundCheck, LevelReport};
use crate::system_family::{GainCountWitness, LimitDiagnostics};

pub const CSV_HEADER: [&str; 8] = ["n", "utility", "delta", "tau", "bound_lhs", "bound_rhs", "slack", "pass"];

/// One row of the per-step table. Absent values become empty CSV cells.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub n: u64,
    pub utility: Option<f64>,
    pub delta: Option<f64>,
    pub tau: Option<f64>,
    pub bound_lhs: Option<f64>,
    pub bound_rhs: Option<f64>,
    pub slack: Option<f64>,
    pub pass: Option<bool>,
}

impl StepRecord {
    pub fn with_bound(mut self, check: &BoundCheck) -> Self {
        self.bound_lhs = Some(check.lhs);
        self.bound_rhs = Some(check.rhs);
        self.slack = Some(check.slack);
        self.pass = Some(check.pass);
        self
    }
}

/// A named inequality `lhs ≤ rhs + tolerance`, optionally tied to a level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub n: Option<u64>,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl CheckRecord {
    pub fn new(name: impl Into<String>, n: Option<u64>, check: BoundCheck) -> Self {
        Self {
            name: name.into(),
            n,
            lhs: check.lhs,
            rhs: check.rhs,
            slack: check.slack,
            tolerance: check.tolerance,
            pass: check.pass,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySummary {
    pub telescoping_residual: f64,
    pub gain_novelty_residual: f64,
    pub diminishing_returns: GainCountWitness,
    pub limit: LimitDiagnostics,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictionSummary {
    pub full_risk: f64,
    pub tau: Vec<f64>,
    pub levels: Vec<LevelReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogicRecord {
    pub formula: String,
    pub verdict: Verdict,
    pub expected: Option<Verdict>,
    /// Verdict of the frame-enumeration oracle, when the formula is small enough.
    pub oracle: Option<Verdict>,
    pub proof: Option<Vec<ProofStep>>,
    pub countermodel: Option<CountermodelRecord>,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub scenario: String,
    pub kind: ScenarioKind,
    pub seed: u64,
    pub n_max: usize,
    pub epsilon: f64,
    pub tolerance: f64,
    pub steps: Vec<StepRecord>,
    pub checks: Vec<CheckRecord>,
    pub trajectory: Option<TrajectorySummary>,
    pub prediction: Option<PredictionSummary>,
    pub logic: Vec<LogicRecord>,
    pub passed: bool,
}

impl Report {
    pub fn failures(&self) -> impl Iterator<Item = &CheckRecord> {
        self.checks.iter().filter(|c| !c.pass)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Structured,
}

impl std::str::FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "structured" | "json" => Ok(ReportFormat::Structured),
            other => Err(format!("unknown report format {other:?}, expected csv or structured")),
        }
    }
}

fn cell<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn emit_report(report: &Report, format: ReportFormat) -> Result<Vec<u8>, HarnessError> {
    match format {
        ReportFormat::Csv => {
            let mut writer = csv::Writer::from_writer(Vec::new());
            writer.write_record(CSV_HEADER)?;
            for s in &report.steps {
                writer.write_record([
                    s.n.to_string(),
                    cell(s.utility),
                    cell(s.delta),
                    cell(s.tau),
                    cell(s.bound_lhs),
                    cell(s.bound_rhs),
                    cell(s.slack),
                    cell(s.pass),
                ])?;
            }
            writer.into_inner().map_err(|e| HarnessError::Csv(e.into_error().into()))
        }
        ReportFormat::Structured => {
            let mut bytes = serde_json::to_vec_pretty(report)?;
            bytes.push(b'\n');
            Ok(bytes)
        }
    }
}

pub fn write_report(report: &Report, format: ReportFormat, path: &Path) -> Result<(), HarnessError> {
    let bytes = emit_report(report, format)?;
    std::fs::write(path, bytes).map_err(|source| HarnessError::Io { path: path.display().to_string(), source })
}
