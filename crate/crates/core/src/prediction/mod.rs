//! Prediction tasks over finite context and outcome spaces.
//!
//! Hypotheses predict through conditional kernels `q_h(y | c)`. Mixing them
//! with the complexity prior gives the full predictive mixture `q`, the
//! renormalized truncated mixture `q_n` over `ℓ(h) ≤ n` and the renormalized
//! tail mixture `r_n` over `ℓ(h) > n`, tied together by
//! `q = Z_n q_n + τ_n r_n`.
//!
//! Decisions are scored with a finite loss table; the Bayes risk at a context
//! is the smallest expected loss over actions, and the averaged risk weighs
//! contexts by a context distribution.
//!
//! Total variation is reported in two conventions, see [`TotalVariation`].

mod bounds;

pub use bounds::{
    verify_prediction_bounds, BoundCheck, LevelReport, PredictionBoundsReport, IDENTITY_TOLERANCE, INEQUALITY_TOLERANCE,
};

use std::collections::BTreeMap;

use ndarray::{Array1, Array2, ArrayView1};
use thiserror::Error;

use crate::complexity_prior::{HypothesisClass, PriorError};

/// Row-sum tolerance for kernels, context weights and mixtures.
pub const ROW_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PredictionError {
    #[error("{what}: expected {expected}, found {found}")]
    Shape { what: &'static str, expected: usize, found: usize },
    #[error("{what} has no rows or no columns")]
    EmptyTable { what: &'static str },
    #[error("no kernel named {0:?}")]
    MissingKernel(String),
    #[error("{what} entry ({row}, {col}) is {value}, expected a value in [0, 1]")]
    OutOfRange { what: &'static str, row: usize, col: usize, value: f64 },
    #[error("{what} row {row} sums to {sum}, expected 1")]
    RowSum { what: &'static str, row: usize, sum: f64 },
    #[error("loss table has no actions")]
    EmptyActions,
    #[error("truncation at level {0} keeps no hypotheses (Z_n = 0)")]
    EmptyTruncation(u32),
    #[error("truncation at level {0} leaves no tail (tau_n = 0)")]
    EmptyTail(u32),
    #[error(transparent)]
    Prior(#[from] PriorError),
}

fn rows_from_vecs(what: &'static str, rows: Vec<Vec<f64>>) -> Result<Array2<f64>, PredictionError> {
    let n_rows = rows.len();
    let n_cols = rows.first().map_or(0, Vec::len);
    if n_rows == 0 || n_cols == 0 {
        return Err(PredictionError::EmptyTable { what });
    }
    if let Some(bad) = rows.iter().find(|r| r.len() != n_cols) {
        return Err(PredictionError::Shape { what, expected: n_cols, found: bad.len() });
    }
    Ok(Array2::from_shape_vec((n_rows, n_cols), rows.into_iter().flatten().collect()).expect("row lengths checked"))
}

fn check_unit_entries(what: &'static str, table: &Array2<f64>) -> Result<(), PredictionError> {
    for ((row, col), &value) in table.indexed_iter() {
        if !value.is_finite() || !(0.0..=1.0).contains(&value) {
            return Err(PredictionError::OutOfRange { what, row, col, value });
        }
    }
    Ok(())
}

fn check_stochastic(what: &'static str, table: &Array2<f64>) -> Result<(), PredictionError> {
    if table.is_empty() {
        return Err(PredictionError::EmptyTable { what });
    }
    check_unit_entries(what, table)?;
    for (row, r) in table.rows().into_iter().enumerate() {
        let sum = r.sum();
        if (sum - 1.0).abs() > ROW_TOLERANCE {
            return Err(PredictionError::RowSum { what, row, sum });
        }
    }
    Ok(())
}

/// `q_h(y | c)` as a contexts × outcomes row-stochastic table.
#[derive(Clone, Debug, PartialEq)]
pub struct ConditionalKernel {
    table: Array2<f64>,
}

impl ConditionalKernel {
    pub fn new(table: Array2<f64>) -> Result<Self, PredictionError> {
        check_stochastic("kernel", &table)?;
        Ok(Self { table })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self, PredictionError> {
        Self::new(rows_from_vecs("kernel", rows)?)
    }

    pub fn table(&self) -> &Array2<f64> {
        &self.table
    }

    pub fn contexts(&self) -> usize {
        self.table.nrows()
    }

    pub fn outcomes(&self) -> usize {
        self.table.ncols()
    }
}

pub type KernelStore = BTreeMap<String, ConditionalKernel>;

/// Distribution `π` over contexts.
#[derive(Clone, Debug, PartialEq)]
pub struct ContextDistribution {
    weights: Array1<f64>,
}

impl ContextDistribution {
    pub fn new(weights: Vec<f64>) -> Result<Self, PredictionError> {
        let table = rows_from_vecs("context distribution", vec![weights])?;
        check_stochastic("context distribution", &table)?;
        Ok(Self { weights: table.row(0).to_owned() })
    }

    pub fn uniform(contexts: usize) -> Result<Self, PredictionError> {
        Self::new(vec![1.0 / contexts as f64; contexts])
    }

    pub fn weights(&self) -> ArrayView1<'_, f64> {
        self.weights.view()
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// `ℓ(u, y)` as an actions × outcomes table with entries in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct LossTable {
    table: Array2<f64>,
}

impl LossTable {
    pub fn new(table: Array2<f64>) -> Result<Self, PredictionError> {
        if table.nrows() == 0 {
            return Err(PredictionError::EmptyActions);
        }
        if table.ncols() == 0 {
            return Err(PredictionError::EmptyTable { what: "loss table" });
        }
        check_unit_entries("loss table", &table)?;
        Ok(Self { table })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self, PredictionError> {
        if rows.is_empty() {
            return Err(PredictionError::EmptyActions);
        }
        Self::new(rows_from_vecs("loss table", rows)?)
    }

    /// `ℓ(u, y) = 0` if `u == y`, else 1.
    pub fn zero_one(outcomes: usize) -> Self {
        Self::new(Array2::from_shape_fn((outcomes, outcomes), |(u, y)| if u == y { 0.0 } else { 1.0 }))
            .expect("0-1 loss is valid")
    }

    pub fn table(&self) -> &Array2<f64> {
        &self.table
    }

    pub fn actions(&self) -> usize {
        self.table.nrows()
    }

    pub fn outcomes(&self) -> usize {
        self.table.ncols()
    }
}

/// `ρ(y | c)` for every context.
#[derive(Clone, Debug, PartialEq)]
pub struct PredictiveDistribution {
    table: Array2<f64>,
}

impl PredictiveDistribution {
    pub fn new(table: Array2<f64>) -> Result<Self, PredictionError> {
        check_stochastic("predictive distribution", &table)?;
        Ok(Self { table })
    }

    pub fn table(&self) -> &Array2<f64> {
        &self.table
    }

    pub fn row(&self, context: usize) -> ArrayView1<'_, f64> {
        self.table.row(context)
    }

    pub fn contexts(&self) -> usize {
        self.table.nrows()
    }

    pub fn outcomes(&self) -> usize {
        self.table.ncols()
    }
}

/// Kernels of `class` in hypothesis order, checked for a common shape.
pub fn resolve_kernels<'a>(
    class: &HypothesisClass,
    kernels: &'a KernelStore,
) -> Result<Vec<&'a ConditionalKernel>, PredictionError> {
    let resolved = class
        .hypotheses()
        .iter()
        .map(|h| kernels.get(&h.kernel).ok_or_else(|| PredictionError::MissingKernel(h.kernel.clone())))
        .collect::<Result<Vec<_>, _>>()?;
    let first = resolved[0];
    for k in &resolved[1..] {
        if k.contexts() != first.contexts() {
            return Err(PredictionError::Shape {
                what: "kernel contexts",
                expected: first.contexts(),
                found: k.contexts(),
            });
        }
        if k.outcomes() != first.outcomes() {
            return Err(PredictionError::Shape {
                what: "kernel outcomes",
                expected: first.outcomes(),
                found: k.outcomes(),
            });
        }
    }
    Ok(resolved)
}

fn mix(kernels: &[&ConditionalKernel], coefficients: impl Iterator<Item = (usize, f64)>) -> PredictiveDistribution {
    let first = kernels[0];
    let mut table = Array2::<f64>::zeros((first.contexts(), first.outcomes()));
    for (i, c) in coefficients {
        table.scaled_add(c, &kernels[i].table);
    }
    PredictiveDistribution { table }
}

/// `q(y|c) = Σ_h w_h q_h(y|c)`.
pub fn full_mixture(class: &HypothesisClass, kernels: &KernelStore) -> Result<PredictiveDistribution, PredictionError> {
    let resolved = resolve_kernels(class, kernels)?;
    Ok(mix(&resolved, (0..class.len()).map(|i| (i, class.weight_at(i)))))
}

/// `q_n(y|c) = Σ_{ℓ(h) ≤ n} (w_h / Z_n) q_h(y|c)`.
pub fn truncated_mixture(
    class: &HypothesisClass,
    level: u32,
    kernels: &KernelStore,
) -> Result<PredictiveDistribution, PredictionError> {
    let resolved = resolve_kernels(class, kernels)?;
    let (z_n, _) = class.partition(level);
    if z_n == 0.0 {
        return Err(PredictionError::EmptyTruncation(level));
    }
    let coefficients = class
        .hypotheses()
        .iter()
        .enumerate()
        .filter(|(_, h)| h.code_length <= level)
        .map(|(i, _)| (i, class.weight_at(i) / z_n));
    Ok(mix(&resolved, coefficients))
}

/// `r_n(y|c) = Σ_{ℓ(h) > n} (w_h / τ_n) q_h(y|c)`.
pub fn tail_mixture(
    class: &HypothesisClass,
    level: u32,
    kernels: &KernelStore,
) -> Result<PredictiveDistribution, PredictionError> {
    let resolved = resolve_kernels(class, kernels)?;
    let (_, tau_n) = class.partition(level);
    if tau_n == 0.0 {
        return Err(PredictionError::EmptyTail(level));
    }
    let coefficients = class
        .hypotheses()
        .iter()
        .enumerate()
        .filter(|(_, h)| h.code_length > level)
        .map(|(i, _)| (i, class.weight_at(i) / tau_n));
    Ok(mix(&resolved, coefficients))
}

#[derive(Clone, Debug, PartialEq)]
pub enum DecompositionCheck {
    /// Largest entrywise `|q - Z_n q_n - τ_n r_n|`.
    Residual(f64),
    Skipped {
        reason: String,
    },
}

pub fn decomposition_residual(
    class: &HypothesisClass,
    level: u32,
    kernels: &KernelStore,
) -> Result<DecompositionCheck, PredictionError> {
    let (z_n, tau_n) = class.partition(level);
    if z_n == 0.0 {
        return Ok(DecompositionCheck::Skipped { reason: format!("Z_n = 0 at level {level}") });
    }
    if tau_n == 0.0 {
        return Ok(DecompositionCheck::Skipped { reason: format!("tau_n = 0 at level {level}") });
    }
    let q = full_mixture(class, kernels)?;
    let q_n = truncated_mixture(class, level, kernels)?;
    let r_n = tail_mixture(class, level, kernels)?;
    let residual = ndarray::Zip::from(&q.table)
        .and(&q_n.table)
        .and(&r_n.table)
        .fold(0.0f64, |acc, &q, &qn, &rn| acc.max((q - z_n * qn - tau_n * rn).abs()));
    Ok(DecompositionCheck::Residual(residual))
}

/// Total variation between two outcome distributions.
///
/// `dual` is the supremum over test functions `|f| ≤ 1` of the difference of
/// expectations, which on a finite space is `Σ|ρ - ρ'|` (attained by the sign
/// of the difference) and ranges over `[0, 2]`. `half` is the usual
/// half-ℓ1 value in `[0, 1]`; the truncation and risk bounds are stated and
/// checked in this convention.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TotalVariation {
    pub dual: f64,
    pub half: f64,
}

pub fn tv_distance(
    rho: ArrayView1<'_, f64>,
    rho_prime: ArrayView1<'_, f64>,
) -> Result<TotalVariation, PredictionError> {
    if rho.len() != rho_prime.len() {
        return Err(PredictionError::Shape { what: "outcome dimension", expected: rho.len(), found: rho_prime.len() });
    }
    let dual: f64 = rho.iter().zip(rho_prime.iter()).map(|(a, b)| (a - b).abs()).sum();
    Ok(TotalVariation { dual, half: 0.5 * dual })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BayesRisk {
    pub value: f64,
    pub argmin_action: usize,
}

/// `V(ρ) = min_u Σ_y ℓ(u,y) ρ(y)`; ties go to the smallest action index.
pub fn bayes_risk(rho: ArrayView1<'_, f64>, loss: &LossTable) -> Result<BayesRisk, PredictionError> {
    if loss.outcomes() != rho.len() {
        return Err(PredictionError::Shape { what: "loss outcomes", expected: rho.len(), found: loss.outcomes() });
    }
    let mut best = BayesRisk { value: f64::INFINITY, argmin_action: 0 };
    for (u, row) in loss.table.rows().into_iter().enumerate() {
        let expected = row.dot(&rho);
        if expected < best.value {
            best = BayesRisk { value: expected, argmin_action: u };
        }
    }
    Ok(best)
}

/// `R(ρ) = Σ_c π(c) V(ρ, c)`.
pub fn averaged_risk(
    rho: &PredictiveDistribution,
    loss: &LossTable,
    pi: &ContextDistribution,
) -> Result<f64, PredictionError> {
    if pi.len() != rho.contexts() {
        return Err(PredictionError::Shape { what: "context count", expected: rho.contexts(), found: pi.len() });
    }
    let mut total = 0.0;
    for (c, weight) in pi.weights.iter().enumerate() {
        total += weight * bayes_risk(rho.row(c), loss)?.value;
    }
    Ok(total)
}

/// `U_pred(n) = -R(q_n)`.
pub fn predictive_utility(
    class: &HypothesisClass,
    level: u32,
    kernels: &KernelStore,
    loss: &LossTable,
    pi: &ContextDistribution,
) -> Result<f64, PredictionError> {
    let q_n = truncated_mixture(class, level, kernels)?;
    Ok(-averaged_risk(&q_n, loss, pi)?)
}
