//! Error type shared by both engines and the protocol layer.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A chain specification violates one or more invariants.
    #[error("invalid chain spec: {0}")]
    InvalidSpec(String),

    /// Uniform odd-length bus has a zero-energy mode; occupancy must be
    /// chosen explicitly.
    #[error("bus of odd length {n} has a zero mode; choose its occupancy explicitly")]
    ZeroMode { n: usize },

    /// Requested dense simulation exceeds the configured site cap.
    #[error("total sites {total} exceed dense-engine cap {cap}")]
    SizeCap { total: usize, cap: usize },

    /// An iterative routine failed to reach its tolerance.
    #[error("{what} did not converge: {detail}")]
    Convergence { what: &'static str, detail: String },

    /// Operator word cannot be brought to absorbable normal form.
    #[error("malformed operator word: {0}")]
    MalformedWord(String),

    /// Input amplitudes are not normalized.
    #[error("two-qubit amplitudes not normalized: |c|^2 = {0}")]
    NonNormalized(f64),

    /// Assembled process map violates trace preservation beyond tolerance.
    #[error("trace preservation violated by {0:.3e} (engine bug or loose integrator tolerance)")]
    TracePreservation(f64),

    /// Assembled process map violates complete positivity beyond tolerance.
    #[error("Choi matrix eigenvalue {0:.3e} below complete-positivity tolerance")]
    CompletePositivity(f64),

    /// Optimizer hit the search-box boundary even after widening.
    #[error("optimizer pinned at search boundary: {0}")]
    OptimBoundary(String),
}
