//! Small hand-built chains with closed-form sequence probabilities.

use crate::model::TransitionModel;

/// Two states: `0 -> 0` with `p`, `0 -> 1` with `1 - p`, `1 -> 0` with 1.
///
/// From state 0 the greedy path stays put (`p^N`), while alternating
/// `0, 1, 0, 1, ..` has probability `(1 - p)^(N/2)` and wins for
/// `0.5 < p < 0.618`.
pub fn two_state_cycle(p: f64) -> TransitionModel {
    TransitionModel::from_edges(2, &[&[(0, p), (1, 1.0 - p)], &[(0, 1.0)]])
        .expect("two-state cycle is a valid chain for p in (0, 1)")
}

/// Three states where state 2 is absorbing and reachable from 0 only
/// through 1: `0 -> 0: p, 0 -> 1: 1-p, 1 -> 0: p, 1 -> 2: 1-p, 2 -> 2: 1`.
///
/// The most likely path from 0 is `1, 2, 2, ..` with probability `(1-p)^2`;
/// one-step rollout from 0 still stays put, two-step rollout finds the escape.
pub fn three_state_escape(p: f64) -> TransitionModel {
    TransitionModel::from_edges(
        3,
        &[
            &[(0, p), (1, 1.0 - p)],
            &[(0, p), (2, 1.0 - p)],
            &[(2, 1.0)],
        ],
    )
    .expect("three-state escape chain is a valid chain for p in (0, 1)")
}
