//! Fixtures shared by the criterion benches.

use chainroll::{generate_chain, GenSpec, TransitionModel};

/// The 100-state, 5%-branching chains used throughout the experiments.
pub fn experiment_chain(seed: u64) -> TransitionModel {
    generate_chain(&GenSpec::new(100, 5, seed)).expect("valid generator spec")
}
