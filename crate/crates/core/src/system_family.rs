//! Expanding system families as nested chains of solved-task sets, and the
//! utility dynamics derived from them: `U(n)`, marginal gains `Δ(n)`, the
//! telescoping identity and finite diminishing-returns diagnostics.
//!
//! Capacity indices are 1-based: `solved_sets()[0]` is the solved set of the
//! first system. A gain `Δ(n)` compares systems `n` and `n + 1`, so
//! `marginal_gains()[n - 1]` holds `Δ(n)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::taskspace::{measure_of, novelty, TaskId, TaskMeasure, TaskSet, TaskSpaceError};

/// Identity tolerance for telescoping and gain/novelty checks.
pub const IDENTITY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SystemError {
    #[error("capability preservation violated: solved set at step {step} does not contain the set at step {}", step - 1)]
    CapabilityPreservation { step: usize },
    #[error("no difficulty given for task {task}")]
    MissingDifficulty { task: usize },
    #[error("difficulty of task {task} must be at least 1")]
    InvalidDifficulty { task: usize },
    #[error("difficulty list has {given} entries for a task space of size {size}")]
    DifficultyLength { given: usize, size: usize },
    #[error("coverage probability {0} is outside [0, 1]")]
    InvalidProbability(f64),
    #[error("n_max must be at least 1")]
    ZeroSteps,
    #[error("{supplied} explicit sets supplied but n_max is {n_max}")]
    NotEnoughSets { supplied: usize, n_max: usize },
    #[error("marginal gains need at least 2 systems, trajectory has {0}")]
    InsufficientLength(usize),
    #[error("epsilon must be positive and finite, got {0}")]
    InvalidEpsilon(f64),
    #[error(transparent)]
    TaskSpace(#[from] TaskSpaceError),
}

/// How the solved-task set of each system in the family is produced.
#[derive(Clone, Debug, PartialEq)]
pub enum SolverRule {
    /// Task `ω` is solved from capacity `d(ω)` on: `A_n = {ω : d(ω) ≤ n}`.
    DifficultyThreshold { difficulty: Vec<u32> },
    /// Each step, every unsolved task is independently solved with the given
    /// probability. Solved tasks are never dropped.
    RandomCoverage { step_probability: f64, seed: u64 },
    /// Caller-supplied chain, validated for nestedness.
    ExplicitSets { sets: Vec<TaskSet> },
}

/// Nested sequence `A_1 ⊆ A_2 ⊆ … ⊆ A_N` over a fixed task measure.
#[derive(Clone, Debug, PartialEq)]
pub struct SystemTrajectory {
    solved_sets: Vec<TaskSet>,
    mu: TaskMeasure,
}

impl SystemTrajectory {
    /// Validates bounds and nestedness of an explicit chain.
    pub fn new(solved_sets: Vec<TaskSet>, mu: TaskMeasure) -> Result<Self, SystemError> {
        if solved_sets.is_empty() {
            return Err(SystemError::ZeroSteps);
        }
        check_chain(&solved_sets, mu.len())?;
        Ok(Self { solved_sets, mu })
    }

    pub fn solved_sets(&self) -> &[TaskSet] {
        &self.solved_sets
    }

    pub fn measure(&self) -> &TaskMeasure {
        &self.mu
    }

    pub fn len(&self) -> usize {
        self.solved_sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.solved_sets.is_empty()
    }

    /// `U(n) = μ(A_n)` for `n = 1..=N`.
    pub fn utility_sequence(&self) -> Vec<f64> {
        self.solved_sets.iter().map(|set| measure_of(set, &self.mu).expect("bounds checked at construction")).collect()
    }

    /// `Δ(n) = μ(A_{n+1} \ A_n)` for `n = 1..N-1`, measured directly on the
    /// novelty sets rather than by differencing utilities.
    pub fn marginal_gains(&self) -> Result<Vec<f64>, SystemError> {
        if self.len() < 2 {
            return Err(SystemError::InsufficientLength(self.len()));
        }
        Ok(self.novelty_masses())
    }

    fn novelty_masses(&self) -> Vec<f64> {
        self.solved_sets
            .windows(2)
            .map(|w| measure_of(&novelty(&w[1], &w[0]), &self.mu).expect("bounds checked"))
            .collect()
    }

    /// Novelty sets `N_{n+1} = A_{n+1} \ A_n`.
    pub fn novelty_sets(&self) -> Vec<TaskSet> {
        self.solved_sets.windows(2).map(|w| novelty(&w[1], &w[0])).collect()
    }

    /// `|U(N) - U(1) - Σ Δ(k)|`. Zero for single-system trajectories.
    pub fn telescoping_residual(&self) -> f64 {
        let utilities = self.utility_sequence();
        let gains = self.novelty_masses();
        let first = utilities[0];
        let last = utilities[utilities.len() - 1];
        (last - first - gains.iter().sum::<f64>()).abs()
    }

    /// Largest `|Δ(n) - (U(n+1) - U(n))|` over the trajectory.
    pub fn gain_novelty_residual(&self) -> f64 {
        let utilities = self.utility_sequence();
        self.novelty_masses()
            .iter()
            .zip(utilities.windows(2))
            .map(|(d, u)| (d - (u[1] - u[0])).abs())
            .fold(0.0, f64::max)
    }

    /// Number of steps with `Δ(n) ≥ epsilon`.
    pub fn large_gain_count(&self, epsilon: f64) -> Result<usize, SystemError> {
        check_epsilon(epsilon)?;
        Ok(self.novelty_masses().iter().filter(|&&d| d >= epsilon).count())
    }

    /// Finite form of diminishing returns. Since the gains are
    /// non-negative and sum to at most one, at most `⌈1/ε⌉` of them can reach
    /// `ε`.
    pub fn diminishing_returns_witness(&self, epsilon: f64) -> Result<GainCountWitness, SystemError> {
        let count = self.large_gain_count(epsilon)?;
        let bound = (1.0 / epsilon).ceil() as usize;
        Ok(GainCountWitness { epsilon, count, bound, holds: count <= bound })
    }

    pub fn limit_diagnostics(&self, epsilon: f64) -> Result<LimitDiagnostics, SystemError> {
        check_epsilon(epsilon)?;
        let utilities = self.utility_sequence();
        let gains = self.novelty_masses();
        let first_n_with_gain_below_epsilon = gains.iter().position(|&d| d < epsilon).map(|i| i + 1);
        let tail_len = gains.len().div_ceil(4);
        let max_tail_gain = gains[gains.len() - tail_len..].iter().copied().fold(0.0, f64::max);
        Ok(LimitDiagnostics { u_last: utilities[utilities.len() - 1], first_n_with_gain_below_epsilon, max_tail_gain })
    }
}

/// Finite proxies for the limiting behaviour of a trajectory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitDiagnostics {
    /// `U(N)`, the last utility value.
    pub u_last: f64,
    /// First 1-based `n` with `Δ(n) < ε`, if any.
    pub first_n_with_gain_below_epsilon: Option<usize>,
    /// Largest gain over the final quartile (rounded up) of the gain list.
    pub max_tail_gain: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GainCountWitness {
    pub epsilon: f64,
    pub count: usize,
    pub bound: usize,
    pub holds: bool,
}

fn check_epsilon(epsilon: f64) -> Result<(), SystemError> {
    if epsilon > 0.0 && epsilon.is_finite() {
        Ok(())
    } else {
        Err(SystemError::InvalidEpsilon(epsilon))
    }
}

fn check_chain(sets: &[TaskSet], size: usize) -> Result<(), SystemError> {
    for set in sets {
        set.check_bounds(size)?;
    }
    match sets.windows(2).position(|w| !w[0].is_subset(&w[1])) {
        Some(i) => Err(SystemError::CapabilityPreservation { step: i + 2 }),
        None => Ok(()),
    }
}

/// Builds the first `n_max` systems of the family described by `rule`.
pub fn build_trajectory(rule: &SolverRule, n_max: usize, mu: &TaskMeasure) -> Result<SystemTrajectory, SystemError> {
    if n_max == 0 {
        return Err(SystemError::ZeroSteps);
    }
    let size = mu.len();
    let sets = match rule {
        SolverRule::DifficultyThreshold { difficulty } => {
            if difficulty.len() < size {
                return Err(SystemError::MissingDifficulty { task: difficulty.len() });
            }
            if difficulty.len() > size {
                return Err(SystemError::DifficultyLength { given: difficulty.len(), size });
            }
            if let Some(task) = difficulty.iter().position(|&d| d == 0) {
                return Err(SystemError::InvalidDifficulty { task });
            }
            (1..=n_max)
                .map(|n| {
                    difficulty.iter().enumerate().filter(|(_, &d)| d as usize <= n).map(|(i, _)| TaskId(i)).collect()
                })
                .collect()
        }
        SolverRule::RandomCoverage { step_probability, seed } => {
            let p = *step_probability;
            if !(0.0..=1.0).contains(&p) {
                return Err(SystemError::InvalidProbability(p));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let mut solved = vec![false; size];
            let mut sets = Vec::with_capacity(n_max);
            for _ in 0..n_max {
                for flag in solved.iter_mut().filter(|f| !**f) {
                    if rng.gen::<f64>() < p {
                        *flag = true;
                    }
                }
                sets.push(TaskSet::from_indices(solved.iter().enumerate().filter(|(_, s)| **s).map(|(i, _)| i)));
            }
            sets
        }
        SolverRule::ExplicitSets { sets } => {
            check_chain(sets, size)?;
            if sets.len() < n_max {
                return Err(SystemError::NotEnoughSets { supplied: sets.len(), n_max });
            }
            sets[..n_max].to_vec()
        }
    };
    SystemTrajectory::new(sets, mu.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn staircase() -> SystemTrajectory {
        let mu = TaskMeasure::uniform(5).unwrap();
        let rule = SolverRule::DifficultyThreshold { difficulty: vec![1, 2, 3, 4, 5] };
        build_trajectory(&rule, 5, &mu).unwrap()
    }

    fn constant(n: usize) -> SystemTrajectory {
        let mu = TaskMeasure::uniform(4).unwrap();
        let rule = SolverRule::DifficultyThreshold { difficulty: vec![1; 4] };
        build_trajectory(&rule, n, &mu).unwrap()
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn threshold_all_easy_solves_everything_at_once() {
        let traj = constant(6);
        assert!(traj.solved_sets().iter().all(|s| s.len() == 4));
        assert!(close(&traj.utility_sequence(), &[1.0; 6], 1e-12));
        assert_eq!(traj.marginal_gains().unwrap(), vec![0.0; 5]);
        assert_eq!(traj.telescoping_residual(), 0.0);
    }

    #[test]
    fn threshold_staircase() {
        let traj = staircase();
        for (n, set) in traj.solved_sets().iter().enumerate() {
            assert_eq!(*set, TaskSet::from_indices(0..=n));
        }
        assert!(close(&traj.utility_sequence(), &[0.2, 0.4, 0.6, 0.8, 1.0], 1e-12));
        assert!(close(&traj.marginal_gains().unwrap(), &[0.2; 4], 1e-12));
        let diag = traj.limit_diagnostics(0.1).unwrap();
        assert_eq!(diag.first_n_with_gain_below_epsilon, None);
        assert!((diag.u_last - 1.0).abs() <= 1e-12);
        assert!((diag.max_tail_gain - 0.2).abs() <= 1e-12);
    }

    #[test]
    fn empty_sets_have_zero_utility() {
        let mu = TaskMeasure::uniform(3).unwrap();
        let rule = SolverRule::ExplicitSets { sets: vec![TaskSet::new(); 4] };
        let traj = build_trajectory(&rule, 4, &mu).unwrap();
        assert_eq!(traj.utility_sequence(), vec![0.0; 4]);
    }

    #[test]
    fn explicit_sets_must_be_nested() {
        let mu = TaskMeasure::uniform(3).unwrap();
        let sets = vec![TaskSet::from_indices([0]), TaskSet::from_indices([0, 1]), TaskSet::from_indices([0])];
        let err = build_trajectory(&SolverRule::ExplicitSets { sets }, 3, &mu).unwrap_err();
        assert_eq!(err, SystemError::CapabilityPreservation { step: 3 });
    }

    #[test]
    fn explicit_sets_length_and_bounds() {
        let mu = TaskMeasure::uniform(3).unwrap();
        let sets = vec![TaskSet::from_indices([0]), TaskSet::from_indices([0, 1])];
        let rule = SolverRule::ExplicitSets { sets };
        assert_eq!(build_trajectory(&rule, 3, &mu).unwrap_err(), SystemError::NotEnoughSets { supplied: 2, n_max: 3 });
        assert_eq!(build_trajectory(&rule, 1, &mu).unwrap().len(), 1);
        let far = SolverRule::ExplicitSets { sets: vec![TaskSet::from_indices([5])] };
        assert!(matches!(
            build_trajectory(&far, 1, &mu),
            Err(SystemError::TaskSpace(TaskSpaceError::OutOfBounds { task: 5, size: 3 }))
        ));
    }

    #[test]
    fn difficulty_configuration_errors() {
        let mu = TaskMeasure::uniform(3).unwrap();
        let short = SolverRule::DifficultyThreshold { difficulty: vec![1, 2] };
        assert_eq!(build_trajectory(&short, 2, &mu).unwrap_err(), SystemError::MissingDifficulty { task: 2 });
        let zero = SolverRule::DifficultyThreshold { difficulty: vec![1, 0, 2] };
        assert_eq!(build_trajectory(&zero, 2, &mu).unwrap_err(), SystemError::InvalidDifficulty { task: 1 });
        let ok = SolverRule::DifficultyThreshold { difficulty: vec![1, 1, 1] };
        assert_eq!(build_trajectory(&ok, 0, &mu).unwrap_err(), SystemError::ZeroSteps);
    }

    #[test]
    fn single_system_has_no_gains() {
        let traj = constant(1);
        assert_eq!(traj.utility_sequence().len(), 1);
        assert_eq!(traj.marginal_gains().unwrap_err(), SystemError::InsufficientLength(1));
        assert_eq!(traj.telescoping_residual(), 0.0);
        let diag = traj.limit_diagnostics(0.5).unwrap();
        assert_eq!(diag.first_n_with_gain_below_epsilon, None);
        assert_eq!(diag.max_tail_gain, 0.0);
    }

    #[test]
    fn constant_trajectory_diagnostics() {
        let diag = constant(8).limit_diagnostics(0.01).unwrap();
        assert_eq!(diag.first_n_with_gain_below_epsilon, Some(1));
        assert_eq!(diag.max_tail_gain, 0.0);
        assert!(constant(3).limit_diagnostics(0.0).is_err());
        assert!(constant(3).limit_diagnostics(f64::NAN).is_err());
    }

    #[test]
    fn geometric_threshold_gains_match_closed_form() {
        let mu = TaskMeasure::geometric(20).unwrap();
        let rule = SolverRule::DifficultyThreshold { difficulty: (1..=20).collect() };
        let traj = build_trajectory(&rule, 20, &mu).unwrap();
        let gains = traj.marginal_gains().unwrap();
        let norm = 1.0 - 2f64.powi(-20);
        for (i, g) in gains.iter().enumerate() {
            let n = (i + 1) as i32;
            assert!((g - 2f64.powi(-(n + 1)) / norm).abs() <= 1e-12);
        }
        // closed form: first n with 2^-(n+1)/norm < 0.01
        let expected = (1..20).find(|&n| 2f64.powi(-(n + 1)) / norm < 0.01).map(|n| n as usize);
        assert_eq!(expected, Some(6));
        let diag = traj.limit_diagnostics(0.01).unwrap();
        assert_eq!(diag.first_n_with_gain_below_epsilon, expected);
    }

    #[test]
    fn random_coverage_is_seeded_and_nested() {
        let mu = TaskMeasure::uniform(30).unwrap();
        let rule = SolverRule::RandomCoverage { step_probability: 0.1, seed: 42 };
        let a = build_trajectory(&rule, 100, &mu).unwrap();
        let b = build_trajectory(&rule, 100, &mu).unwrap();
        assert_eq!(a, b);
        assert!(a.telescoping_residual() <= IDENTITY_TOLERANCE);
        let other = SolverRule::RandomCoverage { step_probability: 0.1, seed: 43 };
        assert_ne!(a, build_trajectory(&other, 100, &mu).unwrap());
        assert!(build_trajectory(&SolverRule::RandomCoverage { step_probability: 1.5, seed: 0 }, 3, &mu).is_err());
    }

    proptest! {
        #[test]
        fn random_coverage_invariants(
            seed in any::<u64>(),
            p in 0.0f64..=1.0,
            size in 1usize..60,
            steps in 1usize..80,
        ) {
            let mu = TaskMeasure::uniform(size).unwrap();
            let traj = build_trajectory(&SolverRule::RandomCoverage { step_probability: p, seed }, steps, &mu).unwrap();
            let u = traj.utility_sequence();
            prop_assert!(u.iter().all(|x| (0.0..=1.0).contains(x)));
            prop_assert!(u.windows(2).all(|w| w[0] <= w[1]));
            prop_assert!(traj.solved_sets().windows(2).all(|w| w[0].is_subset(&w[1])));
            prop_assert!(traj.telescoping_residual() <= IDENTITY_TOLERANCE);
            prop_assert!(traj.gain_novelty_residual() <= IDENTITY_TOLERANCE);
            for eps in [0.5, 0.1, 0.01] {
                prop_assert!(traj.diminishing_returns_witness(eps).unwrap().holds);
            }
        }
    }
}
