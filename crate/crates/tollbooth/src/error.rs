//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid tree: {0}")]
    InvalidTree(String),
    #[error("vertex id {0} out of range (vertex count {1})")]
    InvalidVertex(usize, usize),
    #[error("customer {0}: endpoints coincide (s = t = {1})")]
    DegeneratePath(usize, usize),
    #[error("customer {0}: negative budget")]
    NegativeBudget(usize),
    #[error("pricing scheme covers {got} edges, tree has {want}")]
    SchemeSize { got: usize, want: usize },
    #[error("negative price on edge {0}")]
    NegativePrice(usize),
    #[error("path does not touch the given vertex set")]
    PathMissesSet,
    #[error("not a rational: {0:?}")]
    BadRational(String),
    #[error("negative rational not allowed here: {0:?}")]
    NegativeRational(String),
    #[error("subtree has {0} edges; need at least {1}")]
    TooFewEdges(usize, usize),
    #[error("k = {k} exceeds edge count {edges}")]
    KTooLarge { k: usize, edges: usize },
    #[error("k must be positive")]
    ZeroK,
    #[error("empty budget list")]
    EmptyBudgets,
    #[error("customer {0} is not separated by the decomposition")]
    NotSeparated(usize),
    #[error("enumeration space of {space} exceeds cap {cap} and fallback is disabled")]
    CapExceeded { space: u128, cap: u64 },
    #[error("instance too large for the oracle: {edges} edges, {customers} customers (limits {max_edges}/{max_customers})")]
    OracleTooLarge {
        edges: usize,
        customers: usize,
        max_edges: usize,
        max_customers: usize,
    },
    #[error("invalid instance file: {0}")]
    BadInstanceFile(String),
    #[error("invalid experiment config: {0}")]
    BadConfig(String),
    #[error("cannot draw {0} distinct endpoint pairs from {1} vertices")]
    TooManyCustomers(usize, usize),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
