//! Sparse transition structure of a finite Markov chain and log-domain
//! trajectory probabilities.

use std::fmt;
use std::ops::{Add, AddAssign};

use crate::error::{Error, Result};

/// Absolute tolerance on the row sums of a stochastic row.
pub const STOCHASTIC_TOLERANCE: f64 = 1e-9;

/// Index of a state in a [`TransitionModel`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateId(pub usize);

impl StateId {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for StateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<usize> for StateId {
    fn from(i: usize) -> Self {
        StateId(i)
    }
}

/// Natural logarithm of a probability. Always `<= 0`; negative infinity
/// stands for probability zero and absorbs under addition.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct LogProb(f64);

impl LogProb {
    pub const ONE: LogProb = LogProb(0.0);
    pub const ZERO: LogProb = LogProb(f64::NEG_INFINITY);

    pub fn new(value: f64) -> Result<Self> {
        if value.is_nan() || value > 0.0 {
            return Err(Error::invalid(format!(
                "log-probability {value} is not <= 0"
            )));
        }
        Ok(LogProb(value))
    }

    pub fn from_prob(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::invalid(format!("probability {p} outside [0, 1]")));
        }
        Ok(LogProb(p.ln()))
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    #[inline]
    pub fn prob(self) -> f64 {
        self.0.exp()
    }

    pub fn is_zero(self) -> bool {
        self.0 == f64::NEG_INFINITY
    }

    /// Total order used for comparisons; negative infinity is the minimum.
    pub fn total_cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl Add for LogProb {
    type Output = LogProb;
    #[inline]
    fn add(self, rhs: LogProb) -> LogProb {
        // -inf + finite = -inf; both operands are <= 0 so +inf never appears.
        LogProb(self.0 + rhs.0)
    }
}

impl AddAssign for LogProb {
    fn add_assign(&mut self, rhs: LogProb) {
        self.0 += rhs.0;
    }
}

impl fmt::Display for LogProb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.0, f)
    }
}

/// Successors of one state, ascending by id, zero-probability entries omitted.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TransitionRow {
    successors: Vec<(StateId, f64)>,
}

impl TransitionRow {
    pub fn new(successors: Vec<(StateId, f64)>) -> Self {
        TransitionRow { successors }
    }

    pub fn successors(&self) -> &[(StateId, f64)] {
        &self.successors
    }

    pub fn len(&self) -> usize {
        self.successors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.successors.is_empty()
    }

    pub fn prob(&self, y: StateId) -> Option<f64> {
        self.successors
            .binary_search_by_key(&y, |&(s, _)| s)
            .ok()
            .map(|i| self.successors[i].1)
    }

    fn violations(&self, row: usize, state_count: usize, out: &mut Vec<Violation>) {
        let mut push = |reason: String| {
            out.push(Violation {
                row: Some(row),
                reason,
            })
        };
        if self.successors.is_empty() {
            push(format!("row {row} has no successors"));
            return;
        }
        if self.successors.windows(2).any(|w| w[0].0 >= w[1].0) {
            if self.successors.windows(2).any(|w| w[0].0 == w[1].0) {
                push(format!("row {row} has duplicate successor"));
            } else {
                push(format!("row {row} not sorted ascending"));
            }
        }
        for &(y, p) in &self.successors {
            if y.0 >= state_count {
                push(format!("row {row} successor {y} out of range"));
            }
            if !(p > 0.0 && p <= 1.0) {
                push(format!(
                    "row {row} successor {y} has probability {p} outside (0, 1]"
                ));
            }
        }
        let sum: f64 = self.successors.iter().map(|&(_, p)| p).sum();
        // NaN sums fail too
        let stochastic = (sum - 1.0).abs() <= STOCHASTIC_TOLERANCE;
        if !stochastic {
            push(format!("row {row} not stochastic"));
        }
    }
}

/// One violated invariant of a [`TransitionModel`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub row: Option<usize>,
    pub reason: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.reason)
    }
}

/// The Markov chain `p(y | x)` over states `0..state_count`.
///
/// Immutable once built. [`TransitionModel::new`] enforces every row
/// invariant; [`TransitionModel::from_rows_unchecked`] exists so malformed
/// input can be inspected with [`TransitionModel::validate`].
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionModel {
    state_count: usize,
    rows: Vec<TransitionRow>,
}

impl TransitionModel {
    pub fn new(state_count: usize, rows: Vec<TransitionRow>) -> Result<Self> {
        let model = Self::from_rows_unchecked(state_count, rows);
        match model.validate() {
            Ok(()) => Ok(model),
            Err(violations) => Err(Error::InvalidModel(
                violations
                    .iter()
                    .map(|v| v.reason.as_str())
                    .collect::<Vec<_>>()
                    .join("; "),
            )),
        }
    }

    /// Builds a model from `(x, [(y, p), ..])` rows given in state order.
    pub fn from_edges(state_count: usize, rows: &[&[(usize, f64)]]) -> Result<Self> {
        let rows = rows
            .iter()
            .map(|r| TransitionRow::new(r.iter().map(|&(y, p)| (StateId(y), p)).collect()))
            .collect();
        Self::new(state_count, rows)
    }

    pub fn from_rows_unchecked(state_count: usize, rows: Vec<TransitionRow>) -> Self {
        TransitionModel { state_count, rows }
    }

    /// Checks every row invariant, collecting all violations.
    pub fn validate(&self) -> std::result::Result<(), Vec<Violation>> {
        let mut out = Vec::new();
        if self.state_count == 0 {
            out.push(Violation {
                row: None,
                reason: "state count must be positive".into(),
            });
        }
        if self.rows.len() != self.state_count {
            out.push(Violation {
                row: None,
                reason: format!(
                    "expected {} rows, found {}",
                    self.state_count,
                    self.rows.len()
                ),
            });
        }
        for (i, row) in self.rows.iter().enumerate() {
            row.violations(i, self.state_count, &mut out);
        }
        if out.is_empty() {
            Ok(())
        } else {
            Err(out)
        }
    }

    pub fn state_count(&self) -> usize {
        self.state_count
    }

    pub fn rows(&self) -> &[TransitionRow] {
        &self.rows
    }

    pub fn row(&self, x: StateId) -> Result<&TransitionRow> {
        self.rows.get(x.0).ok_or_else(|| {
            Error::invalid(format!(
                "state {x} out of range for {} states",
                self.state_count
            ))
        })
    }

    pub fn max_out_degree(&self) -> usize {
        self.rows.iter().map(TransitionRow::len).max().unwrap_or(0)
    }

    fn check(&self, s: StateId) -> Result<()> {
        if s.0 < self.state_count {
            Ok(())
        } else {
            Err(Error::invalid(format!(
                "state {s} out of range for {} states",
                self.state_count
            )))
        }
    }

    /// `ln p(y | x)`, or negative infinity when `y` is not a successor of `x`.
    pub fn transition_logprob(&self, x: StateId, y: StateId) -> Result<LogProb> {
        self.check(y)?;
        let row = self.row(x)?;
        Ok(match row.prob(y) {
            Some(p) => LogProb(p.ln()),
            None => LogProb::ZERO,
        })
    }

    /// Log-probability of visiting `states` in order, starting from `start`.
    /// The empty path has log-probability 0.
    pub fn trajectory_logprob(&self, start: StateId, states: &[StateId]) -> Result<LogProb> {
        self.check(start)?;
        let mut acc = LogProb::ONE;
        let mut prev = start;
        for &y in states {
            acc += self.transition_logprob(prev, y)?;
            prev = y;
        }
        Ok(acc)
    }
}

/// A start state, the `N` states selected after it and the occurrence
/// log-probability of that path.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<S = StateId> {
    pub start: S,
    pub states: Vec<S>,
    pub log_prob: LogProb,
}

impl<S> Trajectory<S> {
    pub fn horizon(&self) -> usize {
        self.states.len()
    }
}

impl<S: fmt::Display> Trajectory<S> {
    /// Space-separated rendering of the selected states.
    pub fn render_states(&self) -> String {
        let mut out = String::new();
        for (i, s) in self.states.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            out.push_str(&s.to_string());
        }
        out
    }
}
