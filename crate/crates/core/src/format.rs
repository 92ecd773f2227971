//! Plain-text chain file format.
//!
//! ```text
//! MCHAIN 1
//! states 2
//! 0 0 0.6
//! 0 1 0.4
//! 1 0 1
//! ```
//!
//! Edges are grouped by source ascending and, within a source, by target
//! ascending. Lines starting with `#` are comments. Probabilities are written
//! with the shortest decimal form that parses back to the same `f64`, which is
//! never more than 17 significant digits, so `decode(encode(m)) == m` exactly.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::model::{StateId, TransitionModel, TransitionRow, STOCHASTIC_TOLERANCE};

pub const MAGIC: &str = "MCHAIN 1";

pub fn encode_chain(model: &TransitionModel) -> String {
    encode_chain_with_comments(model, &[])
}

/// Like [`encode_chain`], with `# ` comment lines placed after the header.
pub fn encode_chain_with_comments(model: &TransitionModel, comments: &[String]) -> String {
    let mut out = String::new();
    out.push_str(MAGIC);
    out.push('\n');
    let _ = writeln!(out, "states {}", model.state_count());
    for c in comments {
        let _ = writeln!(out, "# {c}");
    }
    for (x, row) in model.rows().iter().enumerate() {
        for &(y, p) in row.successors() {
            let _ = writeln!(out, "{x} {y} {p}");
        }
    }
    out
}

pub fn decode_chain(text: &str) -> Result<TransitionModel> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.starts_with('#') && !l.trim().is_empty());

    let (line_no, header) = lines
        .next()
        .ok_or_else(|| Error::parse(1, "empty document"))?;
    if header.trim() != MAGIC {
        return Err(Error::parse(
            line_no,
            "malformed header, expected \"MCHAIN 1\"",
        ));
    }
    let (line_no, states) = lines
        .next()
        .ok_or_else(|| Error::parse(line_no + 1, "missing \"states\" line"))?;
    let state_count = match states.split_whitespace().collect::<Vec<_>>().as_slice() {
        ["states", n] => n
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| Error::parse(line_no, "malformed state count"))?,
        _ => {
            return Err(Error::parse(
                line_no,
                "malformed header, expected \"states <n>\"",
            ))
        }
    };

    let mut rows: Vec<Vec<(StateId, f64)>> = vec![Vec::new(); state_count];
    let mut first_line = vec![0usize; state_count];
    let mut last: Option<(usize, usize)> = None;
    let mut last_line = line_no;

    for (line_no, line) in lines {
        last_line = line_no;
        let fields: Vec<&str> = line.split_whitespace().collect();
        let [x, y, p] = fields.as_slice() else {
            return Err(Error::parse(
                line_no,
                "malformed edge, expected \"<x> <y> <p>\"",
            ));
        };
        let x: usize = x
            .parse()
            .map_err(|_| Error::parse(line_no, "malformed source state id"))?;
        let y: usize = y
            .parse()
            .map_err(|_| Error::parse(line_no, "malformed target state id"))?;
        let p: f64 = p
            .parse()
            .map_err(|_| Error::parse(line_no, "malformed probability"))?;
        if x >= state_count || y >= state_count {
            return Err(Error::parse(line_no, "state id out of range"));
        }
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::parse(line_no, "probability outside (0, 1]"));
        }
        if let Some(prev) = last {
            if prev == (x, y) {
                return Err(Error::parse(line_no, "duplicate edge"));
            }
            if prev > (x, y) {
                return Err(Error::parse(line_no, "edges out of order"));
            }
        }
        last = Some((x, y));
        if rows[x].is_empty() {
            first_line[x] = line_no;
        }
        rows[x].push((StateId(y), p));
    }

    for (x, row) in rows.iter().enumerate() {
        if row.is_empty() {
            return Err(Error::parse(
                last_line,
                format!("state {x} has no successors"),
            ));
        }
        let sum: f64 = row.iter().map(|&(_, p)| p).sum();
        if (sum - 1.0).abs() > STOCHASTIC_TOLERANCE {
            return Err(Error::parse(
                first_line[x],
                format!("row {x} not stochastic"),
            ));
        }
    }

    TransitionModel::new(
        state_count,
        rows.into_iter().map(TransitionRow::new).collect(),
    )
}
