use crate::error::{Error, Result};
use crate::model::{LogProb, StateId, Trajectory, TransitionModel};
use crate::policies::CostCounters;

/// Backward most-likely values and their maximizing successors.
///
/// `values[k][x]` is the best log-probability of an `N - k` step path from
/// `x`; `argmax[k][x]` is the first state of such a path (smallest id among
/// ties).
#[derive(Debug, Clone, PartialEq)]
pub struct ValueTable {
    horizon: usize,
    state_count: usize,
    values: Vec<Vec<LogProb>>,
    argmax: Vec<Vec<StateId>>,
    cost: CostCounters,
}

impl ValueTable {
    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn value(&self, k: usize, x: StateId) -> LogProb {
        self.values[k][x.0]
    }

    pub fn values(&self) -> &[Vec<LogProb>] {
        &self.values
    }

    pub fn argmax(&self) -> &[Vec<StateId>] {
        &self.argmax
    }

    /// Comparisons made while filling the table.
    pub fn cost(&self) -> CostCounters {
        self.cost
    }
}

/// Backward recursion `V_k(x) = max_y ln p(y|x) + V_{k+1}(y)`, `V_N = 0`.
pub fn optimal_tables(model: &TransitionModel, horizon: usize) -> Result<ValueTable> {
    let n = model.state_count();
    let mut values = vec![vec![LogProb::ONE; n]; horizon + 1];
    let mut argmax = vec![vec![StateId(0); n]; horizon];
    let mut comparisons = 0u64;
    for k in (0..horizon).rev() {
        let (head, tail) = values.split_at_mut(k + 1);
        let next = &tail[0];
        for (x, row) in model.rows().iter().enumerate() {
            let mut best: Option<(LogProb, StateId)> = None;
            for &(y, p) in row.successors() {
                let cand = LogProb::from_prob(p)? + next[y.0];
                comparisons += 1;
                if best.is_none_or(|(b, _)| cand.value() > b.value()) {
                    best = Some((cand, y));
                }
            }
            let (v, y) =
                best.ok_or_else(|| Error::InvalidModel(format!("row {x} has no successors")))?;
            head[k][x] = v;
            argmax[k][x] = y;
        }
    }
    Ok(ValueTable {
        horizon,
        state_count: n,
        values,
        argmax,
        cost: CostCounters {
            comparisons,
            base_policy_steps: 0,
        },
    })
}

/// Follows `table.argmax` forward from `x0`.
pub fn optimal_trajectory(
    model: &TransitionModel,
    x0: StateId,
    horizon: usize,
    table: &ValueTable,
) -> Result<Trajectory> {
    if table.horizon != horizon || table.state_count != model.state_count() {
        return Err(Error::invalid(format!(
            "value table built for horizon {} over {} states, asked for horizon {horizon} over {}",
            table.horizon,
            table.state_count,
            model.state_count()
        )));
    }
    model.row(x0)?;
    let mut states = Vec::with_capacity(horizon);
    let mut cur = x0;
    for k in 0..horizon {
        cur = table.argmax[k][cur.0];
        states.push(cur);
    }
    let log_prob = model.trajectory_logprob(x0, &states)?;
    Ok(Trajectory {
        start: x0,
        states,
        log_prob,
    })
}
