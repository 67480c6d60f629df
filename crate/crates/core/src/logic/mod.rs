//! Propositional provability logic GL: formulas, Kripke semantics over
//! finite strict partial orders, a sequent-calculus decider with proofs and
//! countermodels, and a brute-force frame-enumeration oracle.
//!
//! `[]φ` plays the role of "φ is provable in the system". The Löb schema
//! `[]([]p -> p) -> []p` is valid; the reflection schema `[]p -> p` is not.

mod formula;
mod kripke;
mod sequent;

use thiserror::Error;

pub use formula::{parse_formula, ModalFormula, ParseError};
pub use kripke::{
    brute_force_countermodel, enumerate_frames, find_countermodel_on_frames, frames_of_size, model_check,
    oracle_world_bound, Countermodel, CountermodelRecord, Frame, KripkeModel, MAX_ENUMERATED_WORLDS,
};
pub use sequent::{gl_decide, gl_decide_with, DecisionResult, GlConfig, ProofNode, ProofStep, Rule, Verdict, Witness};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LogicError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("world {world} is outside a model of {worlds} worlds")]
    WorldOutOfRange { world: usize, worlds: usize },
    #[error("relation is not irreflexive: world {0} sees itself")]
    Reflexive(usize),
    #[error("relation is not transitive: {0} -> {1} -> {2} but not {0} -> {2}")]
    NotTransitive(usize, usize, usize),
    #[error("frames need at least one world")]
    NoWorlds,
    #[error("frame enumeration is limited to {limit} worlds, {requested} requested")]
    FrameLimit { requested: usize, limit: usize },
    #[error("{atoms} atoms over {worlds} worlds is too many valuations to enumerate")]
    ValuationLimit { atoms: usize, worlds: usize },
    #[error("formula has {nodes} nodes, limit is {limit}")]
    FormulaTooLarge { nodes: usize, limit: usize },
    #[error("formula has {atoms} atoms, limit is {limit}")]
    TooManyAtoms { atoms: usize, limit: usize },
}

/// GL verdict of the brute-force oracle at the subformula-derived world bound.
pub fn oracle_verdict(phi: &ModalFormula, exec: crate::exec::Execution) -> Result<Verdict, LogicError> {
    Ok(match brute_force_countermodel(phi, oracle_world_bound(phi), exec)? {
        Some(_) => Verdict::Invalid,
        None => Verdict::Valid,
    })
}
