//! Geometric-mean summaries and percentage recovery.

use std::fmt;

use crate::error::{Error, Result};
use crate::model::LogProb;

/// Below this greedy-to-optimal gap, recovery is reported as undefined.
pub const RECOVERY_DENOMINATOR_GUARD: f64 = 1e-12;

/// `P^(1/N)`: the per-step average transition probability of an `N`-step
/// path. Zero for an impossible path.
pub fn geo_mean(log_prob: LogProb, horizon: usize) -> Result<f64> {
    if horizon == 0 {
        return Err(Error::invalid("horizon must be at least 1"));
    }
    if log_prob.is_zero() {
        return Ok(0.0);
    }
    Ok((log_prob.value() / horizon as f64).exp())
}

/// Arithmetic mean of the geometric means of `(log_prob, N)` entries, which
/// must share one horizon.
pub fn avg_geo_mean(entries: &[(LogProb, usize)]) -> Result<f64> {
    let (_, horizon) = *entries
        .first()
        .ok_or_else(|| Error::invalid("cannot average an empty list"))?;
    let mut sum = 0.0;
    for &(lp, n) in entries {
        if n != horizon {
            return Err(Error::invalid(format!("mixed horizons {horizon} and {n}")));
        }
        sum += geo_mean(lp, n)?;
    }
    Ok(sum / entries.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Recovery {
    Percent(f64),
    /// Greedy already matches the optimum, so there is no loss to recover.
    Undefined,
}

impl Recovery {
    pub fn percent(self) -> Option<f64> {
        match self {
            Recovery::Percent(p) => Some(p),
            Recovery::Undefined => None,
        }
    }
}

impl fmt::Display for Recovery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Recovery::Percent(p) => write!(f, "{p}"),
            Recovery::Undefined => f.write_str("undefined"),
        }
    }
}

/// Share of the greedy policy's loss against the optimum recovered by a
/// policy, in percent, from averaged geometric means.
pub fn pct_recovery(policy_avg: f64, greedy_avg: f64, optimal_avg: f64) -> Recovery {
    let gap = optimal_avg - greedy_avg;
    if gap < RECOVERY_DENOMINATOR_GUARD {
        return Recovery::Undefined;
    }
    Recovery::Percent(100.0 * (policy_avg - greedy_avg) / gap)
}

/// Geometric mean of one decoded trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct StateResult {
    pub chain: usize,
    pub state: usize,
    pub policy: String,
    pub log_prob: LogProb,
    pub geo_mean: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicySummary {
    pub policy: String,
    pub avg_geo_mean: f64,
    /// `None` when no greedy and optimal baselines were run.
    pub recovery: Option<Recovery>,
}

/// Per-state geometric means and their per-policy aggregates.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RecoveryReport {
    pub per_state: Vec<StateResult>,
    pub aggregates: Vec<PolicySummary>,
}

impl RecoveryReport {
    /// Builds aggregates from `per_state`, which must hold the same
    /// `(chain, state)` set for every policy. Rows are sorted by
    /// `(chain, state, policy)` and aggregates by policy label.
    pub fn from_results(mut per_state: Vec<StateResult>, horizon: usize) -> Result<Self> {
        per_state.sort_by(|a, b| {
            (a.chain, a.state, a.policy.as_str()).cmp(&(b.chain, b.state, b.policy.as_str()))
        });
        let mut labels: Vec<&str> = per_state.iter().map(|r| r.policy.as_str()).collect();
        labels.sort_unstable();
        labels.dedup();
        let mut averages = Vec::with_capacity(labels.len());
        for label in &labels {
            let entries: Vec<(LogProb, usize)> = per_state
                .iter()
                .filter(|r| r.policy == *label)
                .map(|r| (r.log_prob, horizon))
                .collect();
            averages.push((label.to_string(), avg_geo_mean(&entries)?));
        }
        let lookup = |name: &str| averages.iter().find(|(l, _)| l == name).map(|&(_, v)| v);
        let baselines = lookup("greedy").zip(lookup("optimal"));
        let aggregates = averages
            .iter()
            .map(|(label, avg)| PolicySummary {
                policy: label.clone(),
                avg_geo_mean: *avg,
                recovery: baselines.map(|(g, o)| pct_recovery(*avg, g, o)),
            })
            .collect();
        Ok(RecoveryReport {
            per_state,
            aggregates,
        })
    }

    pub fn summary(&self, policy: &str) -> Option<&PolicySummary> {
        self.aggregates.iter().find(|s| s.policy == policy)
    }

    pub fn recovery(&self, policy: &str) -> Option<f64> {
        self.summary(policy)?.recovery?.percent()
    }
}
