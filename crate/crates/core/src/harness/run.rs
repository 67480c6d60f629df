use super::report::{CheckRecord, LogicRecord, PredictionSummary, Report, StepRecord, TrajectorySummary};
use super::scenario::{LogicItem, Payload, Scenario, TrajectoryRule};
use super::HarnessError;
use crate::exec::Execution;
use crate::logic::{gl_decide, oracle_verdict, Verdict};
use crate::prediction::{verify_prediction_bounds, BoundCheck};
use crate::synth::PredictionInstance;
use crate::system_family::{build_trajectory, IDENTITY_TOLERANCE};
use crate::taskspace::TaskMeasure;

/// Runs one scenario. The result depends only on the scenario contents.
pub fn run_experiment(scenario: &Scenario) -> Result<Report, HarnessError> {
    let mut report = Report {
        scenario: scenario.name.clone(),
        kind: scenario.kind(),
        seed: scenario.seed,
        n_max: scenario.n_max,
        epsilon: scenario.epsilon,
        tolerance: scenario.tolerance,
        steps: Vec::new(),
        checks: Vec::new(),
        trajectory: None,
        prediction: None,
        logic: Vec::new(),
        passed: false,
    };
    let fail = |message: String| HarnessError::Run { scenario: scenario.name.clone(), message };
    match &scenario.payload {
        Payload::Trajectory { measure, rule } => run_trajectory(scenario, measure, rule, &mut report).map_err(fail)?,
        Payload::Prediction(inst) => run_prediction(scenario, inst, &mut report).map_err(fail)?,
        Payload::Logic(items) => run_logic(items, &mut report).map_err(fail)?,
    }
    report.passed = report.checks.iter().all(|c| c.pass) && report.logic.iter().all(|l| l.pass);
    Ok(report)
}

fn run_trajectory(
    scenario: &Scenario,
    measure: &TaskMeasure,
    rule: &TrajectoryRule,
    report: &mut Report,
) -> Result<(), String> {
    let traj = build_trajectory(&rule.with_seed(scenario.seed), scenario.n_max, measure).map_err(|e| e.to_string())?;
    let utilities = traj.utility_sequence();
    let gains = traj.marginal_gains().map_err(|e| e.to_string())?;
    report.steps = utilities
        .iter()
        .enumerate()
        .map(|(i, &u)| StepRecord {
            n: i as u64 + 1,
            utility: Some(u),
            delta: gains.get(i).copied(),
            ..Default::default()
        })
        .collect();

    let telescoping_residual = traj.telescoping_residual();
    let gain_novelty_residual = traj.gain_novelty_residual();
    let witness = traj.diminishing_returns_witness(scenario.epsilon).map_err(|e| e.to_string())?;
    let limit = traj.limit_diagnostics(scenario.epsilon).map_err(|e| e.to_string())?;

    report.checks.push(CheckRecord::new(
        "telescoping",
        None,
        BoundCheck::new(telescoping_residual, 0.0, IDENTITY_TOLERANCE),
    ));
    report.checks.push(CheckRecord::new(
        "gain_equals_novelty_mass",
        None,
        BoundCheck::new(gain_novelty_residual, 0.0, IDENTITY_TOLERANCE),
    ));
    report.checks.push(CheckRecord::new(
        "diminishing_returns",
        None,
        BoundCheck::new(witness.count as f64, witness.bound as f64, 0.0),
    ));
    report.trajectory =
        Some(TrajectorySummary { telescoping_residual, gain_novelty_residual, diminishing_returns: witness, limit });
    Ok(())
}

fn run_prediction(scenario: &Scenario, inst: &PredictionInstance, report: &mut Report) -> Result<(), String> {
    let n_max = scenario.n_max as u32;
    let bounds =
        verify_prediction_bounds(&inst.class, &inst.kernels, &inst.loss, &inst.contexts, n_max, scenario.tolerance)
            .map_err(|e| e.to_string())?;
    for (i, level) in bounds.levels.iter().enumerate() {
        let next = bounds.levels.get(i + 1).and_then(|l| l.utility);
        let delta = level.utility.zip(next).map(|(u, v)| v - u);
        let mut step = StepRecord {
            n: level.level as u64,
            utility: level.utility,
            delta,
            tau: Some(level.tau_n),
            ..Default::default()
        };
        if let Some(check) = &level.gain_bound {
            step = step.with_bound(check);
        }
        report.steps.push(step);
        for (name, check) in level.checks() {
            report.checks.push(CheckRecord::new(name, Some(level.level as u64), *check));
        }
    }
    report.prediction = Some(PredictionSummary {
        full_risk: bounds.full_risk,
        tau: inst.class.tail_mass_sequence(n_max),
        levels: bounds.levels,
    });
    Ok(())
}

fn run_logic(items: &[LogicItem], report: &mut Report) -> Result<(), String> {
    for item in items {
        let result = gl_decide(&item.formula).map_err(|e| format!("{}: {e}", item.text))?;
        let oracle = oracle_verdict(&item.formula, Execution::Sequential).ok();
        let countermodel = result.countermodel();
        let witness_ok = match result.verdict {
            Verdict::Valid => result.proof().is_some(),
            Verdict::Invalid => countermodel.is_some_and(|c| c.refutes(&item.formula)),
        };
        let pass =
            witness_ok && item.expect.is_none_or(|e| e == result.verdict) && oracle.is_none_or(|o| o == result.verdict);
        report.logic.push(LogicRecord {
            formula: item.formula.to_string(),
            verdict: result.verdict,
            expected: item.expect,
            oracle,
            proof: result.proof().map(|p| p.steps()),
            countermodel: countermodel.map(|c| c.to_record()),
            pass,
        });
    }
    Ok(())
}
