//! Highly likely state sequences in finite Markov chains.
//!
//! Given a chain `p(y | x)`, a start state and a horizon `N`, the crate picks
//! `N` successor states using
//!
//! * the greedy policy (most probable next state),
//! * the most likely policy (backward DP over the whole chain),
//! * rollout: each candidate next state is scored by its transition
//!   probability times the probability of the path a base policy follows
//!   from it, with multistep lookahead, truncated base-policy simulation,
//!   restriction to the most probable successors and repeated application
//!   (the rollout policy becoming the next base policy) as options.
//!
//! All probabilities are handled as natural logarithms.
//!
//! ```
//! use chainroll::fixtures::two_state_cycle;
//! use chainroll::{decode, Policy, RolloutSpec, StateId};
//!
//! let chain = two_state_cycle(0.6);
//! let (greedy, _) = decode(&chain, StateId(0), 4, &Policy::Greedy).unwrap();
//! let (rollout, _) = decode(&chain, StateId(0), 4, &Policy::Rollout(RolloutSpec::default())).unwrap();
//! assert!(rollout.log_prob.value() > greedy.log_prob.value());
//! ```

pub mod error;
pub mod fixtures;
pub mod format;
pub mod gen;
pub mod metrics;
pub mod model;
pub mod policies;
pub mod provider;

pub use error::{Error, Result};
pub use format::{decode_chain, encode_chain};
pub use gen::{generate_chain, GenSpec};
pub use metrics::{avg_geo_mean, geo_mean, pct_recovery, Recovery, RecoveryReport};
pub use model::{LogProb, StateId, Trajectory, TransitionModel, TransitionRow, Violation};
pub use policies::{
    brute_force_optimal, decode, greedy_step, greedy_tail_logprob, optimal_tables,
    optimal_trajectory, rollout_step, CostCounters, Decoder, Policy, RolloutSpec, SuccessorSource,
    ValueTable,
};
