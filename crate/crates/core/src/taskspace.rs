//! Finite task spaces: task identifiers, a fixed probability measure over
//! them, and explicit solved-task sets.

use std::collections::BTreeSet;

use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance on the total mass of a [`TaskMeasure`].
pub const NORMALIZATION_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TaskSpaceError {
    #[error("task measure is empty")]
    EmptyMeasure,
    #[error("weight of task {index} is {weight}, expected a finite value in [0, 1]")]
    InvalidWeight { index: usize, weight: f64 },
    #[error("task weights sum to {sum}, expected 1 within {NORMALIZATION_TOLERANCE:e}")]
    NotNormalized { sum: f64 },
    #[error("task {task} is outside a task space of size {size}")]
    OutOfBounds { task: usize, size: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TaskId(pub usize);

impl TaskId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl std::fmt::Display for TaskId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "t{}", self.0)
    }
}

/// Probability measure with finite support on tasks `0..len`.
///
/// Construction rejects weight vectors whose total is off by more than
/// [`NORMALIZATION_TOLERANCE`]; nothing is renormalized behind the caller's back.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct TaskMeasure {
    weights: Vec<f64>,
}

impl TaskMeasure {
    pub fn new(weights: Vec<f64>) -> Result<Self, TaskSpaceError> {
        if weights.is_empty() {
            return Err(TaskSpaceError::EmptyMeasure);
        }
        for (index, &weight) in weights.iter().enumerate() {
            if !weight.is_finite() || !(0.0..=1.0).contains(&weight) {
                return Err(TaskSpaceError::InvalidWeight { index, weight });
            }
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(TaskSpaceError::NotNormalized { sum });
        }
        Ok(Self { weights })
    }

    pub fn uniform(size: usize) -> Result<Self, TaskSpaceError> {
        if size == 0 {
            return Err(TaskSpaceError::EmptyMeasure);
        }
        Self::new(vec![1.0 / size as f64; size])
    }

    pub fn point_mass(size: usize, task: TaskId) -> Result<Self, TaskSpaceError> {
        if task.0 >= size {
            return Err(TaskSpaceError::OutOfBounds { task: task.0, size });
        }
        let mut weights = vec![0.0; size];
        weights[task.0] = 1.0;
        Self::new(weights)
    }

    /// Task `i` carries mass proportional to `2^-(i+1)`, renormalized over
    /// `levels` tasks. Powers of two up to 2^-52 and their partial sums are
    /// exact in `f64`, so only the final division rounds.
    pub fn geometric(levels: u32) -> Result<Self, TaskSpaceError> {
        if levels == 0 {
            return Err(TaskSpaceError::EmptyMeasure);
        }
        let raw: Vec<f64> = (1..=levels).map(|d| (-(d as f64)).exp2()).collect();
        let total: f64 = raw.iter().sum();
        Self::new(raw.into_iter().map(|w| w / total).collect())
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weight(&self, task: TaskId) -> Option<f64> {
        self.weights.get(task.0).copied()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// The whole task space as a set.
    pub fn full_set(&self) -> TaskSet {
        (0..self.len()).map(TaskId).collect()
    }

    pub fn support(&self) -> TaskSet {
        self.weights.iter().enumerate().filter(|(_, w)| **w > 0.0).map(|(i, _)| TaskId(i)).collect()
    }
}

impl<'de> Deserialize<'de> for TaskMeasure {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let weights = Vec::<f64>::deserialize(d)?;
        TaskMeasure::new(weights).map_err(serde::de::Error::custom)
    }
}

/// Explicit membership set of tasks.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TaskSet {
    members: BTreeSet<TaskId>,
}

impl TaskSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_indices<I: IntoIterator<Item = usize>>(indices: I) -> Self {
        indices.into_iter().map(TaskId).collect()
    }

    pub fn insert(&mut self, task: TaskId) -> bool {
        self.members.insert(task)
    }

    pub fn contains(&self, task: TaskId) -> bool {
        self.members.contains(&task)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = TaskId> + '_ {
        self.members.iter().copied()
    }

    pub fn is_subset(&self, other: &TaskSet) -> bool {
        self.members.is_subset(&other.members)
    }

    pub fn union(&self, other: &TaskSet) -> TaskSet {
        Self { members: self.members.union(&other.members).copied().collect() }
    }

    pub fn max_index(&self) -> Option<usize> {
        self.members.iter().next_back().map(|t| t.0)
    }

    /// Fails with the first member not below `size`.
    pub fn check_bounds(&self, size: usize) -> Result<(), TaskSpaceError> {
        match self.max_index() {
            Some(task) if task >= size => Err(TaskSpaceError::OutOfBounds { task, size }),
            _ => Ok(()),
        }
    }
}

impl FromIterator<TaskId> for TaskSet {
    fn from_iter<I: IntoIterator<Item = TaskId>>(iter: I) -> Self {
        Self { members: iter.into_iter().collect() }
    }
}

/// μ(set): total weight of the members. Clamped to `[0, 1]` so that a full
/// set under a measure summing to `1 + 1e-13` still reads as a probability.
pub fn measure_of(set: &TaskSet, mu: &TaskMeasure) -> Result<f64, TaskSpaceError> {
    set.check_bounds(mu.len())?;
    let total: f64 = set.iter().map(|t| mu.weights[t.0]).sum();
    Ok(total.min(1.0))
}

/// Tasks in `next` but not in `prev`. `prev` need not be a subset of `next`.
pub fn novelty(next: &TaskSet, prev: &TaskSet) -> TaskSet {
    TaskSet { members: next.members.difference(&prev.members).copied().collect() }
}

/// Draws one task from `mu`; the same seed always yields the same task.
pub fn sample_task(mu: &TaskMeasure, seed: u64) -> TaskId {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let index = WeightedIndex::new(&mu.weights).expect("validated measure has positive total mass");
    TaskId(index.sample(&mut rng))
}
