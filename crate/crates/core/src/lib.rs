//! Finite-instance toolkit for the capability dynamics of expanding systems:
//! nested solved-task sets and their utility gains, complexity-weighted
//! prior truncation with its risk bounds, and a decider for the provability
//! logic GL.

pub mod complexity_prior;
pub mod exec;
pub mod harness;
pub mod logic;
pub mod prediction;
pub mod synth;
pub mod system_family;
pub mod taskspace;

pub use exec::Execution;
