//! Numerical tolerances used across the crate.
//!
//! Thresholds are centralized so that every validation and every test pins
//! the same constants.

/// Hermiticity residual below which a matrix is symmetrized to (ρ + ρ†)/2;
/// a larger residual is an error, not a repair.
pub const HERMITIAN: f64 = 1e-10;

/// Allowed deviation of a density-operator trace from one.
pub const TRACE: f64 = 1e-9;

/// Allowed deviation of a state norm from one at construction.
pub const NORM: f64 = 1e-9;

/// Eigenvalues at or below this cutoff contribute zero to entropies
/// (0·log 0 = 0; eigensolvers produce tiny negatives).
pub const EIG_CUTOFF: f64 = 1e-12;

/// Eigenvalues below this floor make a density operator invalid.
pub const EIG_FLOOR: f64 = -1e-8;

/// Orthonormality and unitarity residual allowed in certificates.
pub const CERT_BASIS: f64 = 1e-10;

/// Residual-norm threshold for a common-subspace certificate to verify.
pub const CERT_VERIFY: f64 = 1e-9;

/// Slack absorbed by the bound-chain ordering check.
pub const CHAIN_SLACK: f64 = 1e-7;

/// Normalization residual accepted when loading a state file; the loader
/// renormalizes anything inside this band.
pub const FILE_NORM: f64 = 1e-6;

/// Residual allowed when the single-shot protocol checks that the ancilla
/// registers factor out as |0⟩|0⟩.
pub const ANCILLA_FACTOR: f64 = 1e-10;

/// Trace-distance bound asserted between the protocol output and the
/// exchanged target state.
pub const PROTOCOL_DISTANCE: f64 = 1e-9;

/// Agreement required between the two achievable-rate expressions on a
/// stretched state, S(R|A) and S(A'|BB') + S(B'|A).
pub const RATE_IDENTITY: f64 = 1e-9;
