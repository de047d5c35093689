//! Crate-wide error type.

use crate::driver::IterationTrace;

/// Errors reported by the direction generator, mesh operations, transport
/// solves, and the source iteration driver.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A constructor or operation received an argument outside its domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// A nodal field was combined with a mesh it does not belong to.
    #[error("mesh mismatch: {0}")]
    MeshMismatch(String),

    /// A point evaluation was requested outside the mesh domain.
    #[error("point ({0}, {1}) lies outside the mesh domain")]
    OutsideDomain(f64, f64),

    /// A direction has a vanishing in-plane component, so its inflow and
    /// outflow boundary parts are not well defined.
    #[error("grazing direction (s1 = {0}, s2 = {1}) has no inflow/outflow split")]
    GrazingDirection(f64, f64),

    /// The linear solver for one transport direction stopped short of the
    /// requested relative residual.
    #[error(
        "linear solve for sequence index {seq_index} quadrant {quadrant} reached relative \
         residual {achieved:.3e} after {iterations} iterations (target {target:.3e})"
    )]
    LinearSolveFailed {
        seq_index: u64,
        quadrant: u8,
        achieved: f64,
        target: f64,
        iterations: usize,
    },

    /// A direct factorization met an exactly zero pivot, so the system is
    /// singular to working precision.
    #[error("singular linear system: zero pivot at elimination column {column}")]
    SingularSystem { column: usize },

    /// An inner iteration kept adding batches without its functional
    /// estimate stabilizing.
    #[error(
        "inner iteration of source step {source_step} did not stabilize within {batches} batches"
    )]
    InnerIterationStalled { source_step: usize, batches: usize },

    /// The outer source iteration hit its iteration cap before the stopping
    /// criterion fired. The trace recorded so far is attached.
    #[error("source iteration did not converge within {cap} steps")]
    SourceIterationCap {
        cap: usize,
        trace: Vec<IterationTrace>,
    },

    /// A problem catalog entry was asked for data it does not carry.
    #[error("problem `{0}` has no exact solution attached")]
    MissingExactSolution(String),

    /// A run configuration file or override could not be parsed.
    #[error("config: {0}")]
    Config(String),

    /// An artifact file could not be read back in the expected format.
    #[error("artifact `{path}`: {reason}")]
    Artifact { path: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Shorthand used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
