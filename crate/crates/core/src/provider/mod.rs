//! Next-state probability sources.
//!
//! A [`NextStateProvider`] answers "what follows this state, and how likely".
//! The same policy code runs against an in-memory [`TransitionModel`] or an
//! external model process speaking the line protocol in [`protocol`].
//!
//! Sources come in two tiers. Enumerable sources expose their whole chain and
//! support backward DP; generative sources only answer successor queries and
//! support the greedy and rollout families.

mod memory;
mod process;
pub mod protocol;

use std::cmp::Ordering;
use std::fmt;

use crate::error::{Error, Result};
use crate::model::{LogProb, StateId, Trajectory, TransitionModel};
use crate::policies::{decode, Candidate, CostCounters, Decoder, Policy, SuccessorSource};

pub use memory::InMemoryProvider;
pub use process::ProcessProvider;

/// Slack allowed on the probability mass of a reply.
pub const MASS_TOLERANCE: f64 = 1e-6;

/// Opaque state key.
///
/// Keys order shortlex: shorter keys first, then bytewise. For canonical
/// decimal ids this is numeric order, so tie-breaking through a provider
/// matches tie-breaking on the underlying model.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StateKey(pub String);

impl StateKey {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl Ord for StateKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0
            .len()
            .cmp(&other.0.len())
            .then_with(|| self.0.as_bytes().cmp(other.0.as_bytes()))
    }
}

impl PartialOrd for StateKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for StateKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<StateId> for StateKey {
    fn from(id: StateId) -> Self {
        StateKey(id.0.to_string())
    }
}

impl From<&str> for StateKey {
    fn from(s: &str) -> Self {
        StateKey(s.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TopK {
    All,
    K(usize),
}

impl TopK {
    pub fn from_width(width: Option<usize>) -> Self {
        width.map_or(TopK::All, TopK::K)
    }

    pub fn limit(self) -> usize {
        match self {
            TopK::All => usize::MAX,
            TopK::K(k) => k,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuccessorQuery {
    pub state: StateKey,
    pub top_k: TopK,
}

impl SuccessorQuery {
    pub fn new(state: impl Into<StateKey>, top_k: TopK) -> Result<Self> {
        if top_k == TopK::K(0) {
            return Err(Error::invalid("topK must be at least 1"));
        }
        Ok(SuccessorQuery {
            state: state.into(),
            top_k,
        })
    }
}

/// A checked reply: non-empty, probabilities in `(0, 1]`, descending by
/// probability with ties by ascending key, total mass at most `1 + 1e-6`.
#[derive(Debug, Clone, PartialEq)]
pub struct SuccessorList {
    entries: Vec<(StateKey, f64)>,
}

impl SuccessorList {
    pub fn new(entries: Vec<(StateKey, f64)>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Protocol("entries empty".into()));
        }
        for (k, p) in &entries {
            if !(*p > 0.0 && *p <= 1.0) {
                return Err(Error::Protocol(format!(
                    "probability {p} of {k} outside (0, 1]"
                )));
            }
        }
        let sorted = entries.windows(2).all(|w| {
            let (a, b) = (&w[0], &w[1]);
            a.1 > b.1 || (a.1 == b.1 && a.0 < b.0)
        });
        if !sorted {
            return Err(Error::Protocol("entries not sorted".into()));
        }
        let mass: f64 = entries.iter().map(|(_, p)| p).sum();
        if mass > 1.0 + MASS_TOLERANCE {
            return Err(Error::Protocol(format!(
                "entries carry probability mass {mass}"
            )));
        }
        Ok(SuccessorList { entries })
    }

    pub fn entries(&self) -> &[(StateKey, f64)] {
        &self.entries
    }

    pub fn into_entries(self) -> Vec<(StateKey, f64)> {
        self.entries
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tier {
    Enumerable,
    Generative,
}

pub trait NextStateProvider {
    /// The `topK` most likely successors of `query.state`, in canonical order.
    fn query_successors(&self, query: &SuccessorQuery) -> Result<SuccessorList>;

    fn tier(&self) -> Tier {
        Tier::Generative
    }

    /// The full chain, for enumerable sources.
    fn enumerable_model(&self) -> Option<&TransitionModel> {
        None
    }
}

/// Adapts a provider to the policy engine.
pub struct ProviderSource<'a, P: ?Sized>(pub &'a P);

impl<P: NextStateProvider + ?Sized> SuccessorSource for ProviderSource<'_, P> {
    type State = StateKey;

    fn ranked_successors(
        &self,
        state: &StateKey,
        width: Option<usize>,
    ) -> Result<Vec<Candidate<StateKey>>> {
        let top_k = TopK::from_width(width);
        let list = self
            .0
            .query_successors(&SuccessorQuery::new(state.clone(), top_k)?)?;
        if list.entries().len() > top_k.limit() {
            return Err(Error::Protocol(format!(
                "asked for {} entries, received {}",
                top_k.limit(),
                list.entries().len()
            )));
        }
        list.into_entries()
            .into_iter()
            .map(|(state, p)| {
                Ok(Candidate {
                    state,
                    log_prob: LogProb::from_prob(p)?,
                })
            })
            .collect()
    }
}

fn parse_id(key: &StateKey) -> Result<StateId> {
    let id: usize = key
        .as_str()
        .parse()
        .map_err(|_| Error::NotFound(key.to_string()))?;
    if StateKey::from(StateId(id)) != *key {
        return Err(Error::NotFound(key.to_string()));
    }
    Ok(StateId(id))
}

/// Decodes `horizon` steps from `x0` by querying `provider`.
///
/// [`Policy::Optimal`] needs an enumerable provider and fails with
/// [`Error::Capability`] otherwise. A failure part way through a decode is
/// reported as [`Error::PartialDecode`] carrying the states chosen so far.
pub fn decode_via_provider<P: NextStateProvider + ?Sized>(
    provider: &P,
    x0: &StateKey,
    horizon: usize,
    policy: &Policy,
) -> Result<(Trajectory<StateKey>, CostCounters)> {
    if horizon == 0 {
        return Err(Error::invalid("horizon must be at least 1"));
    }
    if let Policy::Optimal = policy {
        let model = match (provider.tier(), provider.enumerable_model()) {
            (Tier::Enumerable, Some(m)) => m,
            _ => {
                return Err(Error::Capability(
                    "the most likely policy is unavailable on a generative provider".into(),
                ))
            }
        };
        let (t, cost) = decode(model, parse_id(x0)?, horizon, policy)?;
        return Ok((
            Trajectory {
                start: x0.clone(),
                states: t.states.into_iter().map(StateKey::from).collect(),
                log_prob: t.log_prob,
            },
            cost,
        ));
    }
    let source = ProviderSource(provider);
    Decoder::new(&source, horizon, policy)?.decode(x0)
}
