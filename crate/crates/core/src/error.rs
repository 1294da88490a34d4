use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unsupported host space: {0}")]
    UnsupportedHost(String),

    #[error("group order exceeds the cap of {cap} elements")]
    OrderCap { cap: usize },

    #[error("permutation set is not transitive on {n} points")]
    NotTransitive { n: usize },

    #[error("singular generator in group closure")]
    SingularGenerator,

    #[error("group on n={n} is reducible (span rank {rank} < {full})")]
    Reducible { n: usize, rank: usize, full: usize },

    #[error("matrix is not idempotent")]
    NotIdempotent,

    #[error("support violation: {0}")]
    Support(String),

    #[error("pi(c) does not equal the block identity P2")]
    PiMismatch,

    #[error("not an exact diagonal: {0}")]
    NotDiagonal(String),

    #[error("enumeration cap exceeded: {0}")]
    EnumerationCap(String),

    /// A claim the construction guarantees did not hold; indicates a bug.
    #[error("internal invariant violated: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
