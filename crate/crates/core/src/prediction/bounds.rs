//! Level-by-level verification of the truncation bounds on one prediction
//! scenario: mixture decomposition, total-variation contraction, risk
//! perturbation and the marginal-gain bound on predictive utility.

use serde::{Deserialize, Serialize};

use super::{
    averaged_risk, decomposition_residual, full_mixture, tail_mixture, truncated_mixture, tv_distance,
    ContextDistribution, DecompositionCheck, KernelStore, LossTable, PredictionError,
};
use crate::complexity_prior::HypothesisClass;

/// Tolerance for identities that hold exactly up to rounding.
pub const IDENTITY_TOLERANCE: f64 = 1e-12;
/// Default slack for inequalities.
pub const INEQUALITY_TOLERANCE: f64 = 1e-9;

/// `lhs ≤ rhs` up to `tolerance`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl BoundCheck {
    pub fn new(lhs: f64, rhs: f64, tolerance: f64) -> Self {
        let slack = rhs - lhs;
        Self { lhs, rhs, slack, tolerance, pass: slack >= -tolerance }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelReport {
    pub level: u32,
    pub z_n: f64,
    pub tau_n: f64,
    /// Why the level was skipped (`Z_n = 0`), if it was.
    pub skipped: Option<String>,
    /// `U_pred(n) = -R(q_n)`.
    pub utility: Option<f64>,
    /// `|q - Z_n q_n - τ_n r_n|` maximized over entries; absent when `τ_n = 0`.
    pub decomposition: Option<BoundCheck>,
    /// Largest per-context half-ℓ1 distance between `q` and `q_n`, against `τ_n`.
    pub tv_bound: Option<BoundCheck>,
    /// Same distance in the dual (`Σ|·|`) convention, for reference.
    pub tv_dual_max: Option<f64>,
    /// `|TV(q, q_n) - τ_n TV(r_n, q_n)|` maximized over contexts.
    pub tv_identity: Option<BoundCheck>,
    /// `|R(q) - R(q_n)|` against `τ_n`.
    pub risk_bound: Option<BoundCheck>,
    /// `|U_pred(n+1) - U_pred(n)|` against `τ_n + τ_{n+1}`.
    pub gain_bound: Option<BoundCheck>,
    /// The same gain against `2 τ_n`.
    pub gain_vs_twice_tau: Option<BoundCheck>,
}

impl LevelReport {
    pub fn checks(&self) -> impl Iterator<Item = (&'static str, &BoundCheck)> {
        [
            ("decomposition", self.decomposition.as_ref()),
            ("tv_bound", self.tv_bound.as_ref()),
            ("tv_identity", self.tv_identity.as_ref()),
            ("risk_bound", self.risk_bound.as_ref()),
            ("gain_bound", self.gain_bound.as_ref()),
            ("gain_vs_twice_tau", self.gain_vs_twice_tau.as_ref()),
        ]
        .into_iter()
        .filter_map(|(name, c)| c.map(|c| (name, c)))
    }

    pub fn passed(&self) -> bool {
        self.checks().all(|(_, c)| c.pass)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictionBoundsReport {
    /// `R(q)` for the untruncated mixture.
    pub full_risk: f64,
    pub levels: Vec<LevelReport>,
}

impl PredictionBoundsReport {
    pub fn passed(&self) -> bool {
        self.levels.iter().all(LevelReport::passed)
    }

    pub fn violations(&self) -> Vec<(u32, &'static str)> {
        self.levels
            .iter()
            .flat_map(|l| l.checks().filter(|(_, c)| !c.pass).map(move |(name, _)| (l.level, name)))
            .collect()
    }
}

/// Checks every level `0..=n_max`. Levels with `Z_n = 0` are skipped with a
/// reason; the gain bound is checked for each pair `(n, n+1)` with both
/// levels defined and `n + 1 ≤ n_max`.
pub fn verify_prediction_bounds(
    class: &HypothesisClass,
    kernels: &KernelStore,
    loss: &LossTable,
    pi: &ContextDistribution,
    n_max: u32,
    tolerance: f64,
) -> Result<PredictionBoundsReport, PredictionError> {
    let q = full_mixture(class, kernels)?;
    let full_risk = averaged_risk(&q, loss, pi)?;

    let mut levels: Vec<LevelReport> = Vec::with_capacity(n_max as usize + 1);
    for level in 0..=n_max {
        let (z_n, tau_n) = class.partition(level);
        let mut report = LevelReport {
            level,
            z_n,
            tau_n,
            skipped: None,
            utility: None,
            decomposition: None,
            tv_bound: None,
            tv_dual_max: None,
            tv_identity: None,
            risk_bound: None,
            gain_bound: None,
            gain_vs_twice_tau: None,
        };
        if z_n == 0.0 {
            report.skipped = Some(format!("Z_n = 0 at level {level}: no hypothesis has code length <= {level}"));
            levels.push(report);
            continue;
        }
        let q_n = truncated_mixture(class, level, kernels)?;
        let risk_n = averaged_risk(&q_n, loss, pi)?;
        report.utility = Some(-risk_n);

        let mut tv_half_max = 0.0f64;
        let mut tv_dual_max = 0.0f64;
        for c in 0..q.contexts() {
            let tv = tv_distance(q.row(c), q_n.row(c))?;
            tv_half_max = tv_half_max.max(tv.half);
            tv_dual_max = tv_dual_max.max(tv.dual);
        }
        report.tv_bound = Some(BoundCheck::new(tv_half_max, tau_n, tolerance));
        report.tv_dual_max = Some(tv_dual_max);
        report.risk_bound = Some(BoundCheck::new((full_risk - risk_n).abs(), tau_n, tolerance));

        if tau_n > 0.0 {
            if let DecompositionCheck::Residual(r) = decomposition_residual(class, level, kernels)? {
                report.decomposition = Some(BoundCheck::new(r, 0.0, IDENTITY_TOLERANCE));
            }
            let r_n = tail_mixture(class, level, kernels)?;
            let mut worst = 0.0f64;
            for c in 0..q.contexts() {
                let lhs = tv_distance(q.row(c), q_n.row(c))?.half;
                let rhs = tau_n * tv_distance(r_n.row(c), q_n.row(c))?.half;
                worst = worst.max((lhs - rhs).abs());
            }
            report.tv_identity = Some(BoundCheck::new(worst, 0.0, IDENTITY_TOLERANCE));
        }

        if let Some(prev) = levels.last_mut() {
            if let Some(prev_utility) = prev.utility {
                let gain = (-risk_n - prev_utility).abs();
                prev.gain_bound = Some(BoundCheck::new(gain, prev.tau_n + tau_n, tolerance));
                prev.gain_vs_twice_tau = Some(BoundCheck::new(gain, 2.0 * prev.tau_n, tolerance));
            }
        }
        levels.push(report);
    }
    Ok(PredictionBoundsReport { full_risk, levels })
}
