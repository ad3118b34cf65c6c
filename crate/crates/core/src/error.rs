//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Two layouts (or a layout concatenation, or a target/condition pair)
    /// share a subsystem label that must be distinct.
    #[error("label collision: {0}")]
    LabelCollision(String),

    /// A referenced subsystem label does not exist in the layout.
    #[error("unknown label: {0}")]
    UnknownLabel(String),

    /// A partial trace or reduction was asked to keep nothing.
    #[error("empty keep set")]
    EmptyKeepSet,

    /// A matrix exceeded the Hermiticity tolerance.
    #[error("not Hermitian: residual {residual:.3e} exceeds {tol:.1e}")]
    NotHermitian { residual: f64, tol: f64 },

    /// An eigenvalue fell below the negativity floor for density operators.
    #[error("not positive semidefinite: eigenvalue {eigenvalue:.3e}")]
    NotPositive { eigenvalue: f64 },

    /// A Schmidt cut was empty or covered the whole layout.
    #[error("empty or trivial cut")]
    EmptyCut,

    /// Two operators or states live on different layouts.
    #[error("layout mismatch: {0}")]
    LayoutMismatch(String),

    /// A state, coefficient vector, or density trace failed normalization.
    #[error("normalization error: {0}")]
    NormalizationError(String),

    /// A scalar argument is outside its domain.
    #[error("domain error: {0}")]
    DomainError(String),

    /// An unrecognized named state.
    #[error("unknown state: {0}")]
    UnknownState(String),

    /// Subsystem dimensions that must agree do not.
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),

    /// A state or certificate file could not be parsed.
    #[error("parse error: {0}")]
    ParseError(String),

    /// A certificate is unverified (or failed verification) where a verified
    /// common subspace is required.
    #[error("not a verified common subspace: {0}")]
    NotCommon(String),

    /// A combinatorial search guard was exceeded.
    #[error("too large: {0}")]
    TooLarge(String),

    /// An empty isometry-split family was supplied.
    #[error("empty isometry family")]
    EmptyFamily,

    /// An internal protocol invariant failed at run time (for example the
    /// ancilla registers did not factor out, or a cross-check identity was
    /// violated). Indicates an invalid certificate slipped through.
    #[error("protocol error: {0}")]
    ProtocolError(String),

    /// Underlying I/O failure while reading or writing a file.
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
