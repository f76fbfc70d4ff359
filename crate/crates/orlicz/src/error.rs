use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// A grid or grid-backed function failed validation.
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    /// The supremum in a conjugate is not resolved by the grid window:
    /// either the maximizer sits at the open upper end, or the dual point
    /// exceeds a declared extrapolation slope so the supremum is infinite.
    #[error("truncated domain: conjugate unresolved at dual point {dual_point}")]
    TruncatedDomain { dual_point: f64 },

    /// Input curve violates a required convexity/monotonicity property.
    #[error("non-convex input: {0}")]
    NonConvex(String),

    /// Argument outside the operation's domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// Precondition on an input value or spec failed.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("empty sample")]
    EmptySample,

    /// The tail fit window contains too few usable quantile points.
    #[error("insufficient tail: {0}")]
    InsufficientTail(String),

    /// The Orlicz functional is numerically infinite over the whole scan
    /// bracket: the sample is too heavy for the N-function.
    #[error("sample outside the Orlicz space: functional infinite over the scan bracket")]
    OutsideSpace,

    /// MGF check requires an (empirically) centered sample.
    #[error("sample not centered: |mean| = {mean:.3e} exceeds {threshold:.3e}")]
    NotCentered { mean: f64, threshold: f64 },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
