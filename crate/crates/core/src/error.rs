use thiserror::Error;

use crate::graph::VertexSet;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed graph document: {0}")]
    Json(String),

    #[error("self-loop at vertex {vertex} (edge #{position} in input)")]
    SelfLoop { vertex: usize, position: usize },

    #[error("duplicate edge {{{u},{v}}}")]
    DuplicateEdge { u: usize, v: usize },

    #[error("edge {{{u},{v}}} has an endpoint outside 0..{n}")]
    EndpointOutOfRange { u: usize, v: usize, n: usize },

    #[error("vertex {vertex} out of range for a graph on {n} vertices")]
    VertexOutOfRange { vertex: usize, n: usize },

    #[error("edge index {edge} out of range for a graph with {m} edges")]
    EdgeOutOfRange { edge: usize, m: usize },

    #[error("n < 2 unsupported (got n = {0})")]
    TooFewVertices(usize),

    #[error("parameters outside 0 <= l <= 2k-1, k >= 1 (got k = {k}, l = {l})")]
    InvalidParams { k: i64, l: i64 },

    #[error("{what}: {size} exceeds the enumeration guard {limit}")]
    GuardExceeded {
        what: &'static str,
        size: u128,
        limit: u128,
    },

    #[error("protocol {variant} requires {requirement} (got k = {k}, l = {l})")]
    Regime {
        variant: &'static str,
        requirement: &'static str,
        k: i64,
        l: i64,
    },

    #[error("protocol {variant} needs |X| >= {needed}, got |X| = {got}")]
    AliceSetTooSmall {
        variant: &'static str,
        needed: usize,
        got: usize,
    },

    #[error("alice vertices must be distinct (got x = y = {0})")]
    RepeatedAliceVertex(usize),

    #[error("in-degree target infeasible: {reason}{}", witness_suffix(.witness))]
    InfeasibleTarget {
        reason: String,
        witness: Option<VertexSet>,
    },

    #[error("edge set is not a basis: {0}")]
    NotABasis(String),

    #[error("the basis family is empty, so the polytope is empty")]
    EmptyBasisFamily,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("point is not feasible for the lifted polytope: {0}")]
    InfeasiblePoint(String),

    #[error("projection check failed: {0}")]
    ProjectionViolated(String),

    #[error("verification failed: {0}")]
    VerificationFailed(String),

    #[error("unknown {kind} `{name}`")]
    UnknownStrategy { kind: &'static str, name: String },

    #[error("internal consistency failure: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e.to_string())
    }
}

fn witness_suffix(witness: &Option<VertexSet>) -> String {
    match witness {
        Some(x) => format!(" (violating set X = {x})"),
        None => String::new(),
    }
}
