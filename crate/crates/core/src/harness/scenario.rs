//! Scenario files: one JSON object per file.
//!
//! ```json
//! {
//!   "name": "uniform-5",
//!   "kind": "trajectory",
//!   "seed": 0,
//!   "n_max": 5,
//!   "epsilon": 0.1,
//!   "payload": {
//!     "measure": { "uniform": 5 },
//!     "rule": { "difficulty_threshold": [1, 2, 3, 4, 5] }
//!   }
//! }
//! ```
//!
//! Prediction payloads carry `hypotheses`, `kernels` (name to
//! contexts × outcomes rows), `loss` (actions × outcomes rows) and
//! `contexts` (weights). Logic payloads carry `formulas`, each with an
//! optional `expect` verdict.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::error::Category;

use super::HarnessError;
use crate::complexity_prior::{HypothesisClass, HypothesisDescriptor};
use crate::logic::{parse_formula, ModalFormula, Verdict};
use crate::prediction::{
    resolve_kernels, ConditionalKernel, ContextDistribution, KernelStore, LossTable, INEQUALITY_TOLERANCE,
};
use crate::synth::PredictionInstance;
use crate::system_family::{build_trajectory, SolverRule};
use crate::taskspace::{TaskMeasure, TaskSet};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioKind {
    Trajectory,
    Prediction,
    Logic,
}

impl std::fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ScenarioKind::Trajectory => "trajectory",
            ScenarioKind::Prediction => "prediction",
            ScenarioKind::Logic => "logic",
        })
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    name: String,
    kind: ScenarioKind,
    seed: u64,
    n_max: usize,
    epsilon: f64,
    #[serde(default)]
    tolerance: Option<f64>,
    payload: serde_json::Value,
}

#[derive(Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
enum MeasureSpec {
    Uniform(usize),
    Geometric(u32),
    Weights(Vec<f64>),
}

#[derive(Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
enum RuleSpec {
    DifficultyThreshold(Vec<u32>),
    RandomCoverage { step_probability: f64 },
    ExplicitSets(Vec<Vec<usize>>),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TrajectorySpec {
    measure: MeasureSpec,
    rule: RuleSpec,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PredictionSpec {
    hypotheses: Vec<HypothesisDescriptor>,
    kernels: BTreeMap<String, Vec<Vec<f64>>>,
    loss: Vec<Vec<f64>>,
    contexts: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FormulaSpec {
    formula: String,
    #[serde(default)]
    expect: Option<Verdict>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LogicSpec {
    formulas: Vec<FormulaSpec>,
}

/// Solver rule with the seed left to the scenario, so `--seed` can override it.
#[derive(Clone, Debug, PartialEq)]
pub enum TrajectoryRule {
    DifficultyThreshold(Vec<u32>),
    RandomCoverage { step_probability: f64 },
    ExplicitSets(Vec<TaskSet>),
}

impl TrajectoryRule {
    pub fn with_seed(&self, seed: u64) -> SolverRule {
        match self {
            TrajectoryRule::DifficultyThreshold(d) => SolverRule::DifficultyThreshold { difficulty: d.clone() },
            TrajectoryRule::RandomCoverage { step_probability } => {
                SolverRule::RandomCoverage { step_probability: *step_probability, seed }
            }
            TrajectoryRule::ExplicitSets(sets) => SolverRule::ExplicitSets { sets: sets.clone() },
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LogicItem {
    pub text: String,
    pub formula: ModalFormula,
    pub expect: Option<Verdict>,
}

#[derive(Clone, Debug)]
pub enum Payload {
    Trajectory { measure: TaskMeasure, rule: TrajectoryRule },
    Prediction(PredictionInstance),
    Logic(Vec<LogicItem>),
}

#[derive(Clone, Debug)]
pub struct Scenario {
    pub name: String,
    pub seed: u64,
    pub n_max: usize,
    pub epsilon: f64,
    /// Slack allowed on inequality checks. Identities keep their own tolerance.
    pub tolerance: f64,
    pub payload: Payload,
}

impl Scenario {
    pub fn kind(&self) -> ScenarioKind {
        match self.payload {
            Payload::Trajectory { .. } => ScenarioKind::Trajectory,
            Payload::Prediction(_) => ScenarioKind::Prediction,
            Payload::Logic(_) => ScenarioKind::Logic,
        }
    }

    /// Ad-hoc logic scenario for a single formula given on the command line.
    pub fn single_formula(text: &str) -> Result<Self, HarnessError> {
        let formula = parse_formula(text)
            .map_err(|e| HarnessError::Validation { scenario: "formula".into(), message: e.to_string() })?;
        Ok(Scenario {
            name: "formula".into(),
            seed: 0,
            n_max: 1,
            epsilon: 1.0,
            tolerance: INEQUALITY_TOLERANCE,
            payload: Payload::Logic(vec![LogicItem { text: text.to_string(), formula, expect: None }]),
        })
    }

    /// Re-runs payload validation, for use after command-line overrides.
    pub fn validate(&self) -> Result<(), HarnessError> {
        let fail = |message: String| HarnessError::Validation { scenario: self.name.clone(), message };
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(fail(format!("epsilon must be positive and finite, got {}", self.epsilon)));
        }
        if !(self.tolerance >= 0.0 && self.tolerance.is_finite()) {
            return Err(fail(format!("tolerance must be non-negative and finite, got {}", self.tolerance)));
        }
        match &self.payload {
            Payload::Trajectory { measure, rule } => {
                if self.n_max < 2 {
                    return Err(fail(format!("trajectory scenarios need n_max >= 2, got {}", self.n_max)));
                }
                build_trajectory(&rule.with_seed(self.seed), self.n_max, measure).map_err(|e| fail(e.to_string()))?;
            }
            Payload::Prediction(inst) => {
                if self.n_max > u32::MAX as usize {
                    return Err(fail(format!("n_max {} is too large", self.n_max)));
                }
                check_prediction(inst).map_err(fail)?;
            }
            Payload::Logic(items) => {
                if items.is_empty() {
                    return Err(fail("logic scenario lists no formulas".into()));
                }
            }
        }
        Ok(())
    }
}

fn check_prediction(inst: &PredictionInstance) -> Result<(), String> {
    let resolved = resolve_kernels(&inst.class, &inst.kernels).map_err(|e| e.to_string())?;
    let (contexts, outcomes) = (resolved[0].contexts(), resolved[0].outcomes());
    if inst.contexts.len() != contexts {
        return Err(format!(
            "context distribution has {} entries, kernels have {contexts} contexts",
            inst.contexts.len()
        ));
    }
    if inst.loss.outcomes() != outcomes {
        return Err(format!(
            "loss table has {} outcome columns, kernels have {outcomes} outcomes",
            inst.loss.outcomes()
        ));
    }
    Ok(())
}

fn build_payload(kind: ScenarioKind, value: serde_json::Value) -> Result<Payload, String> {
    let err = |e: serde_json::Error| format!("payload: {e}");
    match kind {
        ScenarioKind::Trajectory => {
            let spec: TrajectorySpec = serde_json::from_value(value).map_err(err)?;
            let measure = match spec.measure {
                MeasureSpec::Uniform(n) => TaskMeasure::uniform(n),
                MeasureSpec::Geometric(levels) => TaskMeasure::geometric(levels),
                MeasureSpec::Weights(w) => TaskMeasure::new(w),
            }
            .map_err(|e| e.to_string())?;
            let rule = match spec.rule {
                RuleSpec::DifficultyThreshold(d) => TrajectoryRule::DifficultyThreshold(d),
                RuleSpec::RandomCoverage { step_probability } => TrajectoryRule::RandomCoverage { step_probability },
                RuleSpec::ExplicitSets(sets) => {
                    TrajectoryRule::ExplicitSets(sets.into_iter().map(TaskSet::from_indices).collect())
                }
            };
            Ok(Payload::Trajectory { measure, rule })
        }
        ScenarioKind::Prediction => {
            let spec: PredictionSpec = serde_json::from_value(value).map_err(err)?;
            let class = HypothesisClass::new(spec.hypotheses).map_err(|e| e.to_string())?;
            let mut kernels = KernelStore::new();
            for (name, rows) in spec.kernels {
                let kernel = ConditionalKernel::from_rows(rows).map_err(|e| format!("kernel {name:?}: {e}"))?;
                kernels.insert(name, kernel);
            }
            let loss = LossTable::from_rows(spec.loss).map_err(|e| e.to_string())?;
            let contexts = ContextDistribution::new(spec.contexts).map_err(|e| e.to_string())?;
            Ok(Payload::Prediction(PredictionInstance { class, kernels, loss, contexts }))
        }
        ScenarioKind::Logic => {
            let spec: LogicSpec = serde_json::from_value(value).map_err(err)?;
            spec.formulas
                .into_iter()
                .map(|f| {
                    let formula = parse_formula(&f.formula).map_err(|e| format!("formula {:?}: {e}", f.formula))?;
                    Ok(LogicItem { text: f.formula, formula, expect: f.expect })
                })
                .collect::<Result<_, String>>()
                .map(Payload::Logic)
        }
    }
}

/// Parses and validates scenario text. `origin` names the source in errors.
pub fn parse_scenario_str(text: &str, origin: &str) -> Result<Scenario, HarnessError> {
    let raw: RawScenario = serde_json::from_str(text).map_err(|e| match e.classify() {
        Category::Data => HarnessError::Validation { scenario: origin.to_string(), message: e.to_string() },
        _ => HarnessError::Parse {
            origin: origin.to_string(),
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        },
    })?;
    let payload = build_payload(raw.kind, raw.payload)
        .map_err(|message| HarnessError::Validation { scenario: raw.name.clone(), message })?;
    let scenario = Scenario {
        name: raw.name,
        seed: raw.seed,
        n_max: raw.n_max,
        epsilon: raw.epsilon,
        tolerance: raw.tolerance.unwrap_or(INEQUALITY_TOLERANCE),
        payload,
    };
    scenario.validate()?;
    Ok(scenario)
}

pub fn parse_scenario(path: &Path) -> Result<Scenario, HarnessError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| HarnessError::Io { path: path.display().to_string(), source })?;
    parse_scenario_str(&text, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    const UNIFORM: &str = r#"{
        "name": "uniform-5", "kind": "trajectory", "seed": 0, "n_max": 5, "epsilon": 0.1,
        "payload": { "measure": { "uniform": 5 }, "rule": { "difficulty_threshold": [1, 2, 3, 4, 5] } }
    }"#;

    #[test]
    fn minimal_trajectory() {
        let s = parse_scenario_str(UNIFORM, "t").unwrap();
        assert_eq!(s.kind(), ScenarioKind::Trajectory);
        assert_eq!(s.n_max, 5);
        assert_eq!(s.tolerance, INEQUALITY_TOLERANCE);
    }

    #[test]
    fn kraft_violation_is_reported() {
        let text = r#"{
            "name": "bad", "kind": "prediction", "seed": 0, "n_max": 3, "epsilon": 0.1,
            "payload": {
                "hypotheses": [
                    { "id": 0, "code_length": 1, "kernel": "a" },
                    { "id": 1, "code_length": 1, "kernel": "a" },
                    { "id": 2, "code_length": 1, "kernel": "a" }
                ],
                "kernels": { "a": [[0.5, 0.5]] },
                "loss": [[0, 1], [1, 0]],
                "contexts": [1]
            }
        }"#;
        let err = parse_scenario_str(text, "t").unwrap_err();
        assert!(matches!(err, HarnessError::Validation { .. }));
        assert!(err.to_string().contains("kraft sum exceeds 1"), "{err}");
    }

    #[test]
    fn missing_seed_is_a_validation_error() {
        let text = UNIFORM.replace(r#""seed": 0,"#, "");
        let err = parse_scenario_str(&text, "t").unwrap_err();
        assert!(matches!(err, HarnessError::Validation { .. }));
        assert!(err.to_string().contains("seed"), "{err}");
    }

    #[test]
    fn syntax_errors_carry_position() {
        let err = parse_scenario_str("{\n  \"name\": \"x\",\n  oops\n}", "t").unwrap_err();
        match err {
            HarnessError::Parse { line, column, .. } => assert_eq!((line, column), (3, 3)),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn nestedness_and_shapes_are_checked() {
        let text = UNIFORM.replace(
            r#"{ "difficulty_threshold": [1, 2, 3, 4, 5] }"#,
            r#"{ "explicit_sets": [[0, 1], [0], [0], [0], [0]] }"#,
        );
        let err = parse_scenario_str(&text, "t").unwrap_err();
        assert!(err.to_string().contains("capability preservation"), "{err}");

        let text = r#"{
            "name": "shape", "kind": "prediction", "seed": 0, "n_max": 3, "epsilon": 0.1,
            "payload": {
                "hypotheses": [{ "id": 0, "code_length": 1, "kernel": "a" }],
                "kernels": { "a": [[0.5, 0.5]] },
                "loss": [[0, 1, 1]],
                "contexts": [1]
            }
        }"#;
        assert!(parse_scenario_str(text, "t").unwrap_err().to_string().contains("outcome columns"));
    }

    #[test]
    fn logic_payload() {
        let text = r#"{
            "name": "l", "kind": "logic", "seed": 0, "n_max": 1, "epsilon": 1,
            "payload": { "formulas": [{ "formula": "[]p0 -> p0", "expect": "invalid" }, { "formula": "p0 -> p0" }] }
        }"#;
        let s = parse_scenario_str(text, "t").unwrap();
        let Payload::Logic(items) = &s.payload else { panic!() };
        assert_eq!(items.len(), 2);
        assert_eq!(items[0].expect, Some(Verdict::Invalid));
        assert!(parse_scenario_str(&text.replace("[]p0 -> p0", "[]p0 ->"), "t").is_err());
    }
}
