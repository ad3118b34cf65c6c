//! Numerical toolkit for quantum uncommon information (QUI) bounds.
//!
//! The QUI of a tripartite pure state ψ on systems `A`, `B`, `R` is the
//! minimal asymptotic entanglement rate at which Alice and Bob can exchange
//! their shares `A` and `B` by LOCC while preserving all correlations with
//! the reference `R`. No closed form is known; this crate computes and
//! cross-validates every known bound on it:
//!
//! - the entropy-difference converse `l1 = |S(B) - S(A)|` and its
//!   isometry-assisted refinement `l2` ([`bounds`]);
//! - the referee-assisted converse `l_new` evaluated on a declared
//!   reversible decomposition ([`bounds`]);
//! - the subspace-exchange achievable bound `u_new = S(R|A)` on the
//!   stretched state ([`subspace`], [`bounds`]);
//! - the merge-and-send achievable bound `u1 = S(AB)`.
//!
//! The same subspace machinery extends to the three-party quantum state
//! rotation task ([`qsr`]) and to exact single-shot exchange with ebit
//! accounting ([`singleshot`]).
//!
//! Everything is built on a small dense complex linear-algebra kernel over
//! labeled subsystems ([`qlinalg`]) and a pure-state model with the named
//! state families used throughout ([`qstate`]).
//!
//! All logarithms are base two; entropies are in bits and entanglement in
//! ebits.

pub mod bounds;
pub mod error;
pub mod qlinalg;
pub mod qsr;
pub mod qstate;
pub mod singleshot;
pub mod subspace;
pub mod testkit;
pub mod tol;

pub use error::{Error, Result};
