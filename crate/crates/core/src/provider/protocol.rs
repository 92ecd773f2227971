//! Line protocol between the decoder and an external model process.
//!
//! Each request and reply is one line of JSON:
//!
//! ```text
//! -> {"op":"successors","state":"17","topK":10}
//! <- {"entries":[["4",0.31],["17",0.2]]}
//! <- {"error":"not_found","message":"unknown state \"17\""}
//! ```
//!
//! `topK` is a positive integer or the string `"all"`.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::provider::{NextStateProvider, StateKey, SuccessorList, SuccessorQuery, TopK};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WireTopK {
    K(usize),
    Named(AllMarker),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AllMarker {
    All,
}

impl From<TopK> for WireTopK {
    fn from(t: TopK) -> Self {
        match t {
            TopK::All => WireTopK::Named(AllMarker::All),
            TopK::K(k) => WireTopK::K(k),
        }
    }
}

impl From<WireTopK> for TopK {
    fn from(t: WireTopK) -> Self {
        match t {
            WireTopK::Named(AllMarker::All) => TopK::All,
            WireTopK::K(k) => TopK::K(k),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Request {
    pub op: String,
    pub state: String,
    #[serde(rename = "topK")]
    pub top_k: WireTopK,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Reply {
    Entries { entries: Vec<(String, f64)> },
    Error { error: String, message: String },
}

pub const OP_SUCCESSORS: &str = "successors";
pub const ERR_NOT_FOUND: &str = "not_found";
pub const ERR_BAD_REQUEST: &str = "bad_request";

pub fn encode_request(query: &SuccessorQuery) -> String {
    serde_json::to_string(&Request {
        op: OP_SUCCESSORS.into(),
        state: query.state.0.clone(),
        top_k: query.top_k.into(),
    })
    .expect("request serializes")
}

/// Parses and checks one reply line.
pub fn decode_reply(line: &str) -> Result<SuccessorList> {
    let reply: Reply = serde_json::from_str(line.trim_end())
        .map_err(|e| Error::Protocol(format!("malformed reply: {e}")))?;
    match reply {
        Reply::Entries { entries } => {
            SuccessorList::new(entries.into_iter().map(|(k, p)| (StateKey(k), p)).collect())
        }
        Reply::Error { error, message } if error == ERR_NOT_FOUND => Err(Error::NotFound(message)),
        Reply::Error { error, message } => Err(Error::Protocol(format!("{error}: {message}"))),
    }
}

fn reply_line(result: Result<SuccessorList>) -> String {
    let reply = match result {
        Ok(list) => Reply::Entries {
            entries: list
                .into_entries()
                .into_iter()
                .map(|(k, p)| (k.0, p))
                .collect(),
        },
        Err(Error::NotFound(key)) => Reply::Error {
            error: ERR_NOT_FOUND.into(),
            message: format!("unknown state {key:?}"),
        },
        Err(e) => Reply::Error {
            error: ERR_BAD_REQUEST.into(),
            message: e.to_string(),
        },
    };
    serde_json::to_string(&reply).expect("reply serializes")
}

/// Answers requests from `input` until end of input, or until `max_requests`
/// have been answered. Returns the number of requests answered.
pub fn serve<P: NextStateProvider + ?Sized>(
    provider: &P,
    input: impl BufRead,
    mut output: impl Write,
    max_requests: Option<usize>,
) -> Result<usize> {
    let mut answered = 0;
    for line in input.lines() {
        if max_requests.is_some_and(|m| answered >= m) {
            break;
        }
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let result = serde_json::from_str::<Request>(&line)
            .map_err(|e| Error::Protocol(format!("malformed request: {e}")))
            .and_then(|req| {
                if req.op != OP_SUCCESSORS {
                    return Err(Error::Protocol(format!("unknown op {:?}", req.op)));
                }
                SuccessorQuery::new(StateKey(req.state), req.top_k.into())
            })
            .and_then(|q| provider.query_successors(&q));
        writeln!(output, "{}", reply_line(result))?;
        output.flush()?;
        answered += 1;
    }
    Ok(answered)
}
