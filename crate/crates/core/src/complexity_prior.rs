//! Complexity-weighted hypothesis prior.
//!
//! Hypotheses carry declared prefix-free code lengths `ℓ(h)` in bits, which
//! play the role of description complexity. The prior is `w_h = 2^-ℓ(h) / Z`
//! with `Z = Σ 2^-ℓ(g) ≤ 1` (Kraft). Truncating at level `n` keeps the
//! hypotheses with `ℓ(h) ≤ n`; their mass is `Z_n` and the remainder is the
//! tail mass `τ_n`.
//!
//! Code lengths are capped at 52 bits so every `2^-ℓ` and every partial sum
//! of them is exact in `f64`. The only rounding happens in the final
//! division by `Z`.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const KRAFT_TOLERANCE: f64 = 1e-12;
pub const MAX_CODE_LENGTH: u32 = 52;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PriorError {
    #[error("hypothesis class is empty")]
    Empty,
    #[error("duplicate hypothesis id {0}")]
    DuplicateId(u64),
    #[error("code length {length} of hypothesis {id} exceeds {MAX_CODE_LENGTH} bits")]
    CodeLengthTooLong { id: u64, length: u32 },
    #[error("kraft sum exceeds 1: sum of 2^-length is {sum}")]
    KraftViolation { sum: f64 },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HypothesisDescriptor {
    pub id: u64,
    pub code_length: u32,
    /// Name of the conditional kernel this hypothesis predicts with.
    pub kernel: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HypothesisClass {
    hypotheses: Vec<HypothesisDescriptor>,
    /// Unnormalized `2^-ℓ(h)`, in hypothesis order.
    raw: Vec<f64>,
    kraft_sum: f64,
}

impl HypothesisClass {
    pub fn new(hypotheses: Vec<HypothesisDescriptor>) -> Result<Self, PriorError> {
        if hypotheses.is_empty() {
            return Err(PriorError::Empty);
        }
        let mut seen = BTreeSet::new();
        for h in &hypotheses {
            if !seen.insert(h.id) {
                return Err(PriorError::DuplicateId(h.id));
            }
            if h.code_length > MAX_CODE_LENGTH {
                return Err(PriorError::CodeLengthTooLong { id: h.id, length: h.code_length });
            }
        }
        let raw: Vec<f64> = hypotheses.iter().map(|h| (-(h.code_length as f64)).exp2()).collect();
        let kraft_sum: f64 = raw.iter().sum();
        if kraft_sum > 1.0 + KRAFT_TOLERANCE {
            return Err(PriorError::KraftViolation { sum: kraft_sum });
        }
        Ok(Self { hypotheses, raw, kraft_sum })
    }

    /// Shorthand for tests and generators: ids `0..`, kernel names `k{id}`.
    pub fn from_lengths(lengths: &[u32]) -> Result<Self, PriorError> {
        Self::new(
            lengths
                .iter()
                .enumerate()
                .map(|(i, &code_length)| HypothesisDescriptor { id: i as u64, code_length, kernel: format!("k{i}") })
                .collect(),
        )
    }

    pub fn hypotheses(&self) -> &[HypothesisDescriptor] {
        &self.hypotheses
    }

    pub fn len(&self) -> usize {
        self.hypotheses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hypotheses.is_empty()
    }

    /// `Z = Σ 2^-ℓ(h)`.
    pub fn kraft_sum(&self) -> f64 {
        self.kraft_sum
    }

    pub fn max_code_length(&self) -> u32 {
        self.hypotheses.iter().map(|h| h.code_length).max().unwrap_or(0)
    }

    pub fn min_code_length(&self) -> u32 {
        self.hypotheses.iter().map(|h| h.code_length).min().unwrap_or(0)
    }

    /// Normalized weight of the hypothesis at position `i`.
    pub fn weight_at(&self, i: usize) -> f64 {
        self.raw[i] / self.kraft_sum
    }

    /// Normalized prior weights `w_h`, in hypothesis order.
    pub fn weights(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.weight_at(i)).collect()
    }

    pub fn normalize_prior(&self) -> BTreeMap<u64, f64> {
        self.hypotheses.iter().zip(self.weights()).map(|(h, w)| (h.id, w)).collect()
    }

    /// Exact unnormalized masses of the head (`ℓ ≤ n`) and tail (`ℓ > n`).
    fn raw_split(&self, level: u32) -> (f64, f64) {
        self.hypotheses.iter().zip(&self.raw).fold((0.0, 0.0), |(head, tail), (h, r)| {
            if h.code_length <= level {
                (head + r, tail)
            } else {
                (head, tail + r)
            }
        })
    }

    /// `(Z_n, τ_n)`.
    pub fn partition(&self, level: u32) -> (f64, f64) {
        let (head, tail) = self.raw_split(level);
        (head / self.kraft_sum, tail / self.kraft_sum)
    }

    pub fn truncate(&self, level: u32) -> TruncatedPrior {
        let (head, tail) = self.raw_split(level);
        let weights = if head > 0.0 {
            self.hypotheses
                .iter()
                .zip(&self.raw)
                .filter(|(h, _)| h.code_length <= level)
                .map(|(h, r)| (h.id, r / head))
                .collect()
        } else {
            BTreeMap::new()
        };
        TruncatedPrior { level, z_n: head / self.kraft_sum, tau_n: tail / self.kraft_sum, weights }
    }

    /// `[τ_0, …, τ_{n_max}]`.
    pub fn tail_mass_sequence(&self, n_max: u32) -> Vec<f64> {
        (0..=n_max).map(|n| self.partition(n).1).collect()
    }
}

/// Prior restricted to hypotheses with code length at most `level`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncatedPrior {
    pub level: u32,
    pub z_n: f64,
    pub tau_n: f64,
    /// `w_h / Z_n` for surviving hypotheses; empty when `Z_n = 0`.
    pub weights: BTreeMap<u64, f64>,
}
