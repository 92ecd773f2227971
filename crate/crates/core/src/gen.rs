//! Seeded random chains with a fixed out-degree.
//!
//! Every row gets `q` distinct successors drawn uniformly without replacement
//! and `q` independent `Uniform(0, 1)` weights normalized by their sum.
//!
//! Randomness comes from ChaCha8 (`rand_chacha`). Each row uses its own
//! stream, seeded with the spec seed and selected by the row index, so the
//! output does not depend on the order rows are generated in.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::format::encode_chain_with_comments;
use crate::model::{StateId, TransitionModel, TransitionRow};

/// Header comment written into generated chain files.
pub const WEIGHT_RULE: &str =
    "weights: iid Uniform(0,1) normalized by their sum; rng: ChaCha8, stream per row";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GenSpec {
    pub state_count: usize,
    pub out_degree: usize,
    pub seed: u64,
    pub allow_self_loops: bool,
}

impl GenSpec {
    pub fn new(state_count: usize, out_degree: usize, seed: u64) -> Self {
        GenSpec {
            state_count,
            out_degree,
            seed,
            allow_self_loops: true,
        }
    }

    /// `100 * q / |X|`.
    pub fn branching_percent(&self) -> f64 {
        100.0 * self.out_degree as f64 / self.state_count as f64
    }

    fn check(&self) -> Result<()> {
        if self.state_count == 0 {
            return Err(Error::invalid("state count must be positive"));
        }
        if self.out_degree == 0 {
            return Err(Error::invalid("out-degree must be at least 1"));
        }
        let pool = if self.allow_self_loops {
            self.state_count
        } else {
            self.state_count - 1
        };
        if self.out_degree > pool {
            return Err(Error::invalid(format!(
                "out-degree {} exceeds the {pool} candidate successors",
                self.out_degree
            )));
        }
        Ok(())
    }

    /// Comment lines recording how the chain was produced.
    pub fn describe(&self) -> Vec<String> {
        vec![
            format!(
                "generated: states={} q={} seed={} self_loops={}",
                self.state_count, self.out_degree, self.seed, self.allow_self_loops
            ),
            WEIGHT_RULE.to_string(),
        ]
    }
}

fn row_rng(seed: u64, row: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(row as u64);
    rng
}

/// Partial Fisher-Yates over `0..n`: the first `k` slots of a virtual
/// shuffled array, tracking only displaced slots.
fn sample_distinct(rng: &mut impl Rng, n: usize, k: usize) -> Vec<usize> {
    let mut swapped: HashMap<usize, usize> = HashMap::with_capacity(k * 2);
    let mut out = Vec::with_capacity(k);
    for i in 0..k {
        let j = rng.gen_range(i..n);
        let at_j = *swapped.get(&j).unwrap_or(&j);
        let at_i = *swapped.get(&i).unwrap_or(&i);
        swapped.insert(j, at_i);
        out.push(at_j);
    }
    out
}

fn generate_row(spec: &GenSpec, x: usize) -> TransitionRow {
    let mut rng = row_rng(spec.seed, x);
    let ids: Vec<usize> = if spec.allow_self_loops {
        sample_distinct(&mut rng, spec.state_count, spec.out_degree)
    } else {
        sample_distinct(&mut rng, spec.state_count - 1, spec.out_degree)
            .into_iter()
            .map(|y| if y >= x { y + 1 } else { y })
            .collect()
    };
    let mut weighted: Vec<(usize, f64)> = ids
        .into_iter()
        .map(|y| {
            let mut u: f64 = rng.gen();
            while u == 0.0 {
                u = rng.gen();
            }
            (y, u)
        })
        .collect();
    weighted.sort_unstable_by_key(|&(y, _)| y);
    let total: f64 = weighted.iter().map(|&(_, u)| u).sum();
    TransitionRow::new(
        weighted
            .into_iter()
            .map(|(y, u)| (StateId(y), u / total))
            .collect(),
    )
}

pub fn generate_chain(spec: &GenSpec) -> Result<TransitionModel> {
    spec.check()?;
    let rows = (0..spec.state_count)
        .map(|x| generate_row(spec, x))
        .collect();
    TransitionModel::new(spec.state_count, rows)
}

/// Generated chain in file form, with the generation rule in the header.
pub fn generate_chain_file(spec: &GenSpec) -> Result<String> {
    let model = generate_chain(spec)?;
    Ok(encode_chain_with_comments(&model, &spec.describe()))
}
