use std::fmt;

/// Source position inside a text input.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Position {
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}", self.line, self.column)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("parse error at {pos}: {msg}")]
    Parse { pos: Position, msg: String },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("branch {from}-{to} has zero series impedance")]
    ZeroImpedance { from: String, to: String },

    #[error("unknown bus `{0}`")]
    UnknownBus(String),

    #[error("singular block: {0}")]
    Singular(String),

    #[error("power flow did not converge after {iterations} iterations (mismatch {mismatch:.3e})")]
    Divergence { iterations: usize, mismatch: f64 },

    #[error("radial recovery failed: {0}")]
    Recovery(String),

    #[error("cliques {first:?} and {second:?} share an edge; the network is not radial or the data is too noisy")]
    CliqueOverlap { first: Vec<String>, second: Vec<String> },

    #[error("node `{node}` of clique {clique:?} has no partner attached to the same hidden node")]
    UnpairedNode { node: String, clique: Vec<String> },

    #[error("radial recovery exceeded depth bound {0}")]
    DepthExceeded(usize),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, column: usize, msg: impl Into<String>) -> Self {
        Error::Parse { pos: Position { line, column }, msg: msg.into() }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
