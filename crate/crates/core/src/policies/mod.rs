//! Sequence-selection policies: greedy, most likely (backward DP), the
//! rollout family and an exhaustive oracle.
//!
//! Ties are always broken towards the smallest state id, or for lookahead
//! towards the lexicographically smallest id sequence.

mod brute;
mod greedy;
mod optimal;
mod rollout;

use std::fmt;
use std::hash::Hash;
use std::ops::{Add, AddAssign};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::{LogProb, StateId, Trajectory, TransitionModel};

pub use brute::{brute_force_optimal, BRUTE_FORCE_LIMIT};
pub use greedy::{greedy_step, greedy_tail_logprob};
pub use optimal::{optimal_tables, optimal_trajectory, ValueTable};
pub use rollout::{Decoder, Step};

/// Work performed by a decode, counted the way the complexity estimate for
/// rollout counts it: one comparison per candidate probability or Q-factor
/// examined.
///
/// Cached intermediate results are charged at their from-scratch cost, so the
/// counters do not depend on what was already cached.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CostCounters {
    pub comparisons: u64,
    pub base_policy_steps: u64,
}

impl Add for CostCounters {
    type Output = CostCounters;
    fn add(self, rhs: CostCounters) -> CostCounters {
        CostCounters {
            comparisons: self.comparisons.saturating_add(rhs.comparisons),
            base_policy_steps: self.base_policy_steps.saturating_add(rhs.base_policy_steps),
        }
    }
}

impl AddAssign for CostCounters {
    fn add_assign(&mut self, rhs: CostCounters) {
        *self = *self + rhs;
    }
}

/// Configuration of a rollout policy.
///
/// `level` 0 uses greedy as the base policy; level `r` uses the level `r - 1`
/// rollout policy with the same lookahead, truncation and width.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RolloutSpec {
    pub lookahead: usize,
    /// Base-policy simulation length; `None` runs to the horizon.
    pub truncation: Option<usize>,
    /// Successors considered per node; `None` considers all.
    pub width: Option<usize>,
    pub level: usize,
}

impl Default for RolloutSpec {
    fn default() -> Self {
        RolloutSpec {
            lookahead: 1,
            truncation: None,
            width: None,
            level: 0,
        }
    }
}

impl RolloutSpec {
    pub fn with_lookahead(lookahead: usize) -> Self {
        RolloutSpec {
            lookahead,
            ..Self::default()
        }
    }

    pub fn truncate(mut self, m: usize) -> Self {
        self.truncation = Some(m);
        self
    }

    pub fn width(mut self, w: usize) -> Self {
        self.width = Some(w);
        self
    }

    pub fn level(mut self, r: usize) -> Self {
        self.level = r;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.lookahead == 0 {
            return Err(Error::invalid("lookahead must be at least 1"));
        }
        if self.truncation == Some(0) {
            return Err(Error::invalid("truncation must be at least 1"));
        }
        if self.width == Some(0) {
            return Err(Error::invalid("width must be at least 1"));
        }
        Ok(())
    }
}

/// A step rule for [`decode`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Policy {
    Greedy,
    Optimal,
    Rollout(RolloutSpec),
}

impl fmt::Display for Policy {
    /// Labels look like `greedy`, `optimal` or `rollout_l2_m10_w5_r1`, with
    /// the `_m`, `_w` and `_r` parts omitted at their defaults.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Policy::Greedy => f.write_str("greedy"),
            Policy::Optimal => f.write_str("optimal"),
            Policy::Rollout(spec) => {
                write!(f, "rollout_l{}", spec.lookahead)?;
                if let Some(m) = spec.truncation {
                    write!(f, "_m{m}")?;
                }
                if let Some(w) = spec.width {
                    write!(f, "_w{w}")?;
                }
                if spec.level > 0 {
                    write!(f, "_r{}", spec.level)?;
                }
                Ok(())
            }
        }
    }
}

impl FromStr for Policy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "greedy" => return Ok(Policy::Greedy),
            "optimal" => return Ok(Policy::Optimal),
            _ => {}
        }
        let bad = || Error::invalid(format!("unrecognized policy label {s:?}"));
        let rest = s.strip_prefix("rollout").ok_or_else(bad)?;
        let mut spec = RolloutSpec::default();
        for part in rest.split('_').skip(1) {
            let (key, value) = part.split_at(1.min(part.len()));
            let value: usize = value.parse().map_err(|_| bad())?;
            match key {
                "l" => spec.lookahead = value,
                "m" => spec.truncation = Some(value),
                "w" => spec.width = Some(value),
                "r" => spec.level = value,
                _ => return Err(bad()),
            }
        }
        if !rest.is_empty() && !rest.starts_with('_') {
            return Err(bad());
        }
        spec.validate()?;
        Ok(Policy::Rollout(spec))
    }
}

/// One successor with its transition log-probability.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate<S> {
    pub state: S,
    pub log_prob: LogProb,
}

/// Anything that can list the successors of a state.
///
/// Implemented by [`TransitionModel`] directly and by every
/// [`crate::provider::NextStateProvider`] through
/// [`crate::provider::ProviderSource`].
pub trait SuccessorSource {
    type State: Clone + Eq + Hash + Ord + fmt::Debug + fmt::Display;

    /// Successors in canonical order (descending probability, ties by
    /// ascending state), cut to the first `width` entries when given.
    fn ranked_successors(
        &self,
        state: &Self::State,
        width: Option<usize>,
    ) -> Result<Vec<Candidate<Self::State>>>;
}

impl SuccessorSource for TransitionModel {
    type State = StateId;

    fn ranked_successors(
        &self,
        state: &StateId,
        width: Option<usize>,
    ) -> Result<Vec<Candidate<StateId>>> {
        let mut entries: Vec<(StateId, f64)> = self.row(*state)?.successors().to_vec();
        // Stable sort keeps ascending ids among equal probabilities.
        entries.sort_by(|a, b| b.1.total_cmp(&a.1));
        if let Some(w) = width {
            entries.truncate(w);
        }
        Ok(entries
            .into_iter()
            .map(|(y, p)| Candidate {
                state: y,
                log_prob: LogProb::from_prob(p).expect("validated row probability"),
            })
            .collect())
    }
}

/// Decodes `horizon` steps from `x0` under `policy`.
///
/// The returned log-probability is recomputed from the model along the
/// selected path.
pub fn decode(
    model: &TransitionModel,
    x0: StateId,
    horizon: usize,
    policy: &Policy,
) -> Result<(Trajectory, CostCounters)> {
    if horizon == 0 {
        return Err(Error::invalid("horizon must be at least 1"));
    }
    model.row(x0)?;
    match policy {
        Policy::Optimal => {
            let table = optimal_tables(model, horizon)?;
            let traj = optimal_trajectory(model, x0, horizon, &table)?;
            Ok((traj, table.cost()))
        }
        _ => {
            let mut decoder = Decoder::new(model, horizon, policy)?;
            let (traj, cost) = decoder.decode(&x0)?;
            let log_prob = model.trajectory_logprob(x0, &traj.states)?;
            Ok((Trajectory { log_prob, ..traj }, cost))
        }
    }
}

/// One rollout decision at `(k, x)` for horizon `horizon`; adds the work done
/// to `counters`.
pub fn rollout_step(
    model: &TransitionModel,
    x: StateId,
    k: usize,
    horizon: usize,
    spec: &RolloutSpec,
    counters: &mut CostCounters,
) -> Result<StateId> {
    let mut decoder = Decoder::new(model, horizon, &Policy::Rollout(*spec))?;
    let step = decoder.step(&x, k)?;
    *counters += step.cost;
    Ok(step.next)
}
