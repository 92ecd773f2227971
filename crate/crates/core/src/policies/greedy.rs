use crate::error::Result;
use crate::model::{LogProb, StateId, TransitionModel};

/// Most probable successor of `x`, smallest id among equals.
pub fn greedy_step(model: &TransitionModel, x: StateId) -> Result<StateId> {
    let row = model.row(x)?;
    let mut best = row.successors()[0];
    for &(y, p) in &row.successors()[1..] {
        // Ascending ids: strict comparison keeps the smallest maximizer.
        if p > best.1 {
            best = (y, p);
        }
    }
    Ok(best.0)
}

/// Log-probability of the `steps`-step greedy path from `y`, accumulated
/// forwards along the path.
pub fn greedy_tail_logprob(model: &TransitionModel, y: StateId, steps: usize) -> Result<LogProb> {
    let mut acc = LogProb::ONE;
    let mut cur = y;
    model.row(cur)?;
    for _ in 0..steps {
        let next = greedy_step(model, cur)?;
        acc += model.transition_logprob(cur, next)?;
        cur = next;
    }
    Ok(acc)
}
