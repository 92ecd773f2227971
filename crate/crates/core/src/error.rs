use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{message}, line {line}")]
    Parse { line: usize, message: String },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    /// The request is too large to evaluate exhaustively.
    #[error("refused: {0}")]
    Refused(String),

    #[error("unknown state {0:?}")]
    NotFound(String),

    #[error("protocol error: {0}")]
    Protocol(String),

    /// The source cannot provide what the policy needs (e.g. backward DP on a
    /// generative provider).
    #[error("capability error: {0}")]
    Capability(String),

    /// A decode stopped part way; `states` holds the selections made so far.
    #[error("decode interrupted after {} steps: {source}", states.len())]
    PartialDecode {
        states: Vec<String>,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: msg.into(),
        }
    }
}
