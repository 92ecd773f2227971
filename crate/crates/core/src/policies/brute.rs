use crate::error::{Error, Result};
use crate::model::{LogProb, StateId, Trajectory, TransitionModel};

/// Largest number of paths `brute_force_optimal` will enumerate.
pub const BRUTE_FORCE_LIMIT: u64 = 10_000_000;

/// Most likely `horizon`-step path from `x0` by exhaustive depth-first
/// enumeration. Among equally likely paths the lexicographically smallest id
/// sequence wins.
pub fn brute_force_optimal(
    model: &TransitionModel,
    x0: StateId,
    horizon: usize,
) -> Result<Trajectory> {
    model.row(x0)?;
    let q = model.max_out_degree() as u64;
    let paths = (0..horizon).try_fold(1u64, |acc, _| acc.checked_mul(q));
    match paths {
        Some(n) if n <= BRUTE_FORCE_LIMIT => {}
        _ => {
            return Err(Error::Refused(format!(
                "{q}^{horizon} paths exceeds the enumeration limit of {BRUTE_FORCE_LIMIT}"
            )))
        }
    }

    struct Search<'a> {
        model: &'a TransitionModel,
        horizon: usize,
        path: Vec<StateId>,
        best: Option<(f64, Vec<StateId>)>,
    }

    impl Search<'_> {
        fn visit(&mut self, x: StateId, acc: f64) {
            if self.path.len() == self.horizon {
                // Paths arrive in lexicographic order, so only a strictly
                // better one replaces the incumbent.
                if self.best.as_ref().is_none_or(|(b, _)| acc > *b) {
                    self.best = Some((acc, self.path.clone()));
                }
                return;
            }
            let row = &self.model.rows()[x.0];
            for &(y, p) in row.successors() {
                self.path.push(y);
                self.visit(y, acc + p.ln());
                self.path.pop();
            }
        }
    }

    let mut search = Search {
        model,
        horizon,
        path: Vec::with_capacity(horizon),
        best: None,
    };
    search.visit(x0, 0.0);
    let (value, states) = search.best.expect("rows are non-empty");
    Ok(Trajectory {
        start: x0,
        states,
        log_prob: LogProb::new(value)?,
    })
}
