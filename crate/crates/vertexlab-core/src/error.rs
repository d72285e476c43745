//! Error type shared by every module.

use alloc::string::String;

/// Failure modes of the library operations.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// Tensor legs or shapes do not match.
    #[error("shape mismatch: {0}")]
    ShapeError(String),
    /// The parameter sampler could not satisfy its guard.
    #[error("sampling failed: {0}")]
    SamplingError(String),
    /// A lattice or operator size is outside the supported range.
    #[error("size out of range: {0}")]
    SizeError(String),
    /// Two independent evaluation strategies disagree.
    #[error("internal inconsistency: {0}")]
    InternalInconsistency(String),
    /// A normalising partition function vanishes.
    #[error("degenerate normalisation: {0}")]
    DegenerateNormalization(String),
    /// Invalid lattice geometry, tail path or embedding.
    #[error("geometry error: {0}")]
    GeometryError(String),
    /// A `sinh(aη)` denominator is too close to zero.
    #[error("singular height: {0}")]
    SingularHeight(String),
    /// The free-boson coupling vanishes.
    #[error("degenerate coupling: {0}")]
    DegenerateCoupling(String),
    /// Invalid scalar arguments.
    #[error("invalid argument: {0}")]
    ArgError(String),
    /// A truncated series is not under control.
    #[error("truncation error: {0}")]
    TruncationError(String),
    /// A bounded search found no witness.
    #[error("probe inconclusive: {0}")]
    ProbeInconclusive(String),
}

/// Crate-wide result alias.
pub type Result<T> = core::result::Result<T, Error>;
