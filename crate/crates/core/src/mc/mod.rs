//! Explicit-state probabilistic model checking for DTMCs.

mod build;
pub mod compile;
mod dtmc;
mod export;
mod property;
mod simulate;
mod solve;

use thiserror::Error;

pub use build::{build, build_compiled, BuildOptions};
pub use compile::{compile, model_hash, CompiledModel};
pub use dtmc::{ExplicitDtmc, VarLayout};
pub use export::{export, import};
pub use property::{check, check_with, Objective, Property, Sense};
pub use simulate::{simulate, walk, Step};
pub use solve::{expected_reward, expected_reward_vector, prob0, prob1, prob_reach, prob_reach_vector, SolverOptions};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum McError {
    #[error("model error: {0}")]
    Model(String),
    #[error("unbound constants: {}", .0.join(", "))]
    UnboundConstants(Vec<String>),
    #[error("expected {expected} parameter values, got {found}")]
    ParamCount { expected: usize, found: usize },
    #[error("evaluation failed in state {state}: {message}")]
    Eval { state: String, message: String },
    #[error("variable `{var}` would take value {value} outside its range in state {state}")]
    OutOfRange { state: String, var: String, value: i64 },
    #[error("nondeterminism in state {state}: actions {} are enabled together", .actions.join(", "))]
    Nondeterminism { state: String, actions: Vec<String> },
    #[error("deadlock in state {state}")]
    Deadlock { state: String },
    #[error("probabilities in state {state} are invalid: {message}")]
    Probability { state: String, message: String },
    #[error("state space too large: {0}")]
    TooLarge(String),
    #[error("unknown label \"{0}\"")]
    UnknownLabel(String),
    #[error("unknown reward structure \"{0}\"")]
    UnknownReward(String),
    #[error("expected reward \"{reward}\" diverges: \"{target}\" is not reached with probability 1")]
    DivergentReward { reward: String, target: String },
    #[error("value iteration did not converge within {iterations} iterations")]
    NonConvergence { iterations: usize },
    #[error("malformed property `{0}`")]
    BadProperty(String),
    #[error("malformed chain file, line {line}: {message}")]
    Import { line: usize, message: String },
}
