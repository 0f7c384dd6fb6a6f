//! Explicit-state Markov chains and MDPs, and a reachability model checker.
//!
//! Every probability computation first settles the qualitative part
//! (probability exactly 0 or 1) by graph analysis and only then solves the
//! remaining states numerically, one strongly connected component at a time.

mod chain;
mod distribution;
mod extremal;
pub(crate) mod graph;
mod mdp;
pub(crate) mod reach;
mod spec;
mod submc;

pub use chain::MarkovChain;
pub use distribution::{Distribution, PROB_SUM_TOLERANCE};
pub use extremal::{mdp_extremal, mdp_extremal_with, Extremal, Optimum};
pub use graph::{forward_reachable, StateSet};
pub use mdp::{induced_chain, Mdp, MemorylessScheduler};
pub use reach::{
    check, check_with, reach_probability, reach_probability_with, CheckResult, CheckerConfig,
    SolveMethod,
};
pub use spec::{CmpOp, Specification, DEFAULT_TOLERANCE};
pub use submc::{sub_mc, successors_of};

use thiserror::Error;

/// Index of a state in a model.
pub type StateId = usize;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("probability {prob} for successor {target} is outside (0, 1]")]
    InvalidProbability { target: StateId, prob: f64 },

    #[error("successor {0} appears twice in one distribution")]
    DuplicateTarget(StateId),

    #[error("distribution sums to {0}, expected 1")]
    BadSum(f64),

    #[error("distribution is empty")]
    EmptyDistribution,

    #[error("state {state} out of range for a model with {len} states")]
    StateOutOfRange { state: StateId, len: usize },

    #[error("model has no states")]
    NoStates,

    #[error("state {0} has no enabled action")]
    NoActions(StateId),

    #[error("goal set is empty")]
    EmptyGoal,

    #[error("threshold {0} is outside [0, 1]")]
    InvalidThreshold(f64),

    #[error("scheduler covers {got} states but the model has {expected}")]
    SchedulerLength { expected: usize, got: usize },

    #[error("scheduler picks action {action} at state {state}, which has {available} actions")]
    SchedulerAction {
        state: StateId,
        action: usize,
        available: usize,
    },

    #[error("critical set must contain the initial state {0}")]
    MissingInitial(StateId),
}
