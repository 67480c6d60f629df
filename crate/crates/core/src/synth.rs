//! Seeded generators for randomized instances: coverage trajectories,
//! prediction scenarios and modal formulas. Used by the property suites,
//! the acceptance run and the benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::complexity_prior::{HypothesisClass, HypothesisDescriptor};
use crate::logic::ModalFormula;
use crate::prediction::{ConditionalKernel, ContextDistribution, KernelStore, LossTable};
use crate::system_family::{build_trajectory, SolverRule, SystemTrajectory};
use crate::taskspace::TaskMeasure;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_simplex(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    // occasionally sharpen so near-deterministic rows show up too
    let power = if rng.gen_bool(0.3) { 4 } else { 1 };
    let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(1e-3..1.0f64).powi(power)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / total).collect()
}

/// Random task measure over `tasks` tasks with a random per-step coverage
/// probability in `[0.005, 0.2]`.
pub fn random_coverage_rule(seed: u64, tasks: usize) -> (TaskMeasure, SolverRule) {
    let mut rng = rng(seed);
    let mu = TaskMeasure::new(random_simplex(&mut rng, tasks)).expect("normalized weights");
    let step_probability = rng.gen_range(0.005..=0.2);
    (mu, SolverRule::RandomCoverage { step_probability, seed })
}

pub fn random_coverage_trajectory(seed: u64, tasks: usize, steps: usize) -> SystemTrajectory {
    let (mu, rule) = random_coverage_rule(seed, tasks);
    build_trajectory(&rule, steps, &mu).expect("valid random coverage rule")
}

/// Everything needed to evaluate predictive risk.
#[derive(Clone, Debug)]
pub struct PredictionInstance {
    pub class: HypothesisClass,
    pub kernels: KernelStore,
    pub loss: LossTable,
    pub contexts: ContextDistribution,
}

#[derive(Clone, Copy, Debug)]
pub struct PredictionShape {
    pub max_outcomes: usize,
    pub max_contexts: usize,
    pub max_hypotheses: usize,
    pub max_code_length: u32,
    pub max_actions: usize,
}

impl Default for PredictionShape {
    fn default() -> Self {
        Self { max_outcomes: 5, max_contexts: 10, max_hypotheses: 64, max_code_length: 12, max_actions: 8 }
    }
}

/// Kraft-valid random code lengths in `1..=max_len`, at most `count` of them.
/// A length that would overflow the Kraft budget is retried at `max_len`
/// and dropped if even that does not fit.
pub fn random_code_lengths(rng: &mut impl Rng, count: usize, max_len: u32) -> Vec<u32> {
    let mut lengths = Vec::with_capacity(count);
    let mut budget = 1.0f64;
    for _ in 0..count {
        let len = rng.gen_range(1..=max_len);
        for candidate in [len, max_len] {
            let cost = (-(candidate as f64)).exp2();
            if cost <= budget {
                budget -= cost;
                lengths.push(candidate);
                break;
            }
        }
    }
    lengths
}

pub fn random_prediction_instance(seed: u64, shape: &PredictionShape) -> PredictionInstance {
    let mut rng = rng(seed);
    let outcomes = rng.gen_range(2..=shape.max_outcomes.max(2));
    let contexts = rng.gen_range(1..=shape.max_contexts);
    let hypotheses = rng.gen_range(1..=shape.max_hypotheses);
    let actions = rng.gen_range(1..=shape.max_actions);

    let lengths = random_code_lengths(&mut rng, hypotheses, shape.max_code_length);
    let descriptors: Vec<HypothesisDescriptor> = lengths
        .iter()
        .enumerate()
        .map(|(i, &code_length)| HypothesisDescriptor { id: i as u64, code_length, kernel: format!("k{i}") })
        .collect();
    let kernels = descriptors
        .iter()
        .map(|h| {
            let rows = (0..contexts).map(|_| random_simplex(&mut rng, outcomes)).collect();
            (h.kernel.clone(), ConditionalKernel::from_rows(rows).expect("rows are normalized"))
        })
        .collect();
    let loss = if rng.gen_bool(0.2) && actions >= outcomes {
        LossTable::zero_one(outcomes)
    } else {
        let rows = (0..actions).map(|_| (0..outcomes).map(|_| rng.gen_range(0.0..=1.0)).collect()).collect();
        LossTable::from_rows(rows).expect("entries in [0, 1]")
    };
    let contexts = ContextDistribution::new(random_simplex(&mut rng, contexts)).expect("normalized");
    PredictionInstance {
        class: HypothesisClass::new(descriptors).expect("Kraft-valid lengths"),
        kernels,
        loss,
        contexts,
    }
}

#[derive(Clone, Copy, Debug)]
pub struct FormulaShape {
    pub atoms: u32,
    pub max_box_depth: usize,
    pub max_nodes: usize,
}

impl Default for FormulaShape {
    fn default() -> Self {
        Self { atoms: 2, max_box_depth: 3, max_nodes: 15 }
    }
}

/// Random formula with exactly a uniformly chosen number of nodes in
/// `1..=max_nodes`, box depth at most `max_box_depth`.
pub fn random_formula(seed: u64, shape: &FormulaShape) -> ModalFormula {
    let mut rng = rng(seed);
    let nodes = rng.gen_range(1..=shape.max_nodes);
    grow(&mut rng, nodes, shape.max_box_depth, shape.atoms)
}

fn grow(rng: &mut ChaCha8Rng, nodes: usize, box_budget: usize, atoms: u32) -> ModalFormula {
    if nodes == 1 {
        return ModalFormula::atom(rng.gen_range(0..atoms));
    }
    let unary_only = nodes == 2;
    let choice = if unary_only { rng.gen_range(0..2) } else { rng.gen_range(0..5) };
    match choice {
        0 => ModalFormula::not(grow(rng, nodes - 1, box_budget, atoms)),
        1 if box_budget > 0 => ModalFormula::boxed(grow(rng, nodes - 1, box_budget - 1, atoms)),
        1 => ModalFormula::not(grow(rng, nodes - 1, box_budget, atoms)),
        op => {
            let left = rng.gen_range(1..nodes - 1);
            let a = grow(rng, left, box_budget, atoms);
            let b = grow(rng, nodes - 1 - left, box_budget, atoms);
            match op {
                2 => ModalFormula::implies(a, b),
                3 => ModalFormula::and(a, b),
                _ => ModalFormula::or(a, b),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formulas_respect_shape() {
        let shape = FormulaShape::default();
        for seed in 0..500 {
            let phi = random_formula(seed, &shape);
            assert!(phi.size() <= 15);
            assert!(phi.box_depth() <= 3);
            assert!(phi.atoms().iter().all(|&a| a < 2));
        }
        assert_eq!(random_formula(7, &shape), random_formula(7, &shape));
    }

    #[test]
    fn prediction_instances_respect_shape() {
        let shape = PredictionShape::default();
        for seed in 0..50 {
            let inst = random_prediction_instance(seed, &shape);
            assert!(inst.class.len() <= 64 && !inst.class.is_empty());
            assert!(inst.class.max_code_length() <= 12);
            assert!(inst.class.kraft_sum() <= 1.0);
            assert!(inst.loss.actions() <= 8);
            assert!(inst.contexts.len() <= 10);
            assert!(inst.loss.outcomes() <= 5);
        }
    }

    #[test]
    fn code_lengths_fit_kraft() {
        let mut r = rng(3);
        for _ in 0..100 {
            let ls = random_code_lengths(&mut r, 64, 12);
            let sum: f64 = ls.iter().map(|&l| (-(l as f64)).exp2()).sum();
            assert!(sum <= 1.0);
        }
    }
}
