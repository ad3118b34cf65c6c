//! Three-party quantum state rotation: rotation-symmetric common subspaces,
//! the three-party stretched state, and the achievable entanglement rates of
//! the merge-and-send and subspace-rotation strategies.
//!
//! The task: party i hands its share `Aᵢ` to party i+1 (cyclically) while
//! preserving correlations with the reference `R`. Merge-and-send gives the
//! rate `uᵢ = S(Aᵢ|Aᵢ₊₁) + S(Aᵢ₊₁|Aᵢ₊₂) + S(Aᵢ₊₂)` for the i-th starter;
//! a rotation-symmetric common subspace lets the parties rotate only the
//! uncommon block on ancillas, at rate `vᵢ` computed on the three-party
//! stretched state. No converse is computed for this task: the required
//! four-party reversible decompositions are not known.
//!
//! Index arithmetic is modulo 3 with an offset of 1: i+k ↦ ((i−1+k) mod 3)+1.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::bounds::{neg_p_log2_p, neg_p_log2_p_half};
use crate::error::{Error, Result};
use crate::qlinalg::{
    apply_basis_permutation, apply_local_matrix, conditional_entropy, entropy_of, SubsystemLayout,
};
use crate::qstate::{make_xi, rotate_final_state, PureState, ZetaParams};
use crate::subspace::{apply_stretch_map, CanonicalMap, CommonSubspaceCert};
use crate::tol;

const PARTIES: [&str; 3] = ["A1", "A2", "A3"];
const PRIMES: [&str; 3] = ["A1'", "A2'", "A3'"];

const ZERO: C64 = C64::new(0.0, 0.0);

/// Party label for 1-based starter index with cyclic wrap.
fn party(i: usize) -> &'static str {
    PARTIES[(i - 1) % 3]
}

fn prime(i: usize) -> &'static str {
    PRIMES[(i - 1) % 3]
}

/// A candidate rotation-symmetric common subspace: a basis subset of the
/// (equal) party spaces plus per-party unitaries. The symmetry residual is
/// computed against the cyclic rotation instead of the two-party exchange.
#[derive(Clone, Debug)]
pub struct ThreePartyCert {
    dim: usize,
    indices: Vec<usize>,
    unitaries: [DMatrix<C64>; 3],
    residual_decomposition: Option<f64>,
    residual_symmetry: Option<f64>,
    verified: bool,
}

impl ThreePartyCert {
    pub fn from_indices(dim: usize, indices: Vec<usize>) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::DomainError(
                "common subspace must be non-empty".into(),
            ));
        }
        let mut indices = indices;
        indices.sort_unstable();
        indices.dedup();
        if let Some(&max) = indices.last() {
            if max >= dim {
                return Err(Error::DomainError(format!(
                    "subspace index {max} out of range for dimension {dim}"
                )));
            }
        }
        let id = DMatrix::identity(dim, dim);
        Ok(Self {
            dim,
            indices,
            unitaries: [id.clone(), id.clone(), id],
            residual_decomposition: None,
            residual_symmetry: None,
            verified: false,
        })
    }

    pub fn with_unitaries(mut self, unitaries: [DMatrix<C64>; 3]) -> Result<Self> {
        for (k, u) in unitaries.iter().enumerate() {
            if u.nrows() != self.dim || u.ncols() != self.dim {
                return Err(Error::DimMismatch(format!(
                    "V{} is {}x{}, expected {}x{}",
                    k + 1,
                    u.nrows(),
                    u.ncols(),
                    self.dim,
                    self.dim
                )));
            }
            let prod = u * u.adjoint();
            let id = DMatrix::<C64>::identity(self.dim, self.dim);
            if (prod - id).norm() > tol::CERT_BASIS * self.dim as f64 {
                return Err(Error::DomainError(format!("V{} is not unitary", k + 1)));
            }
        }
        self.unitaries = unitaries;
        self.verified = false;
        self.residual_decomposition = None;
        self.residual_symmetry = None;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn d_common(&self) -> usize {
        self.indices.len()
    }

    pub fn is_full_space(&self) -> bool {
        self.indices.len() == self.dim
    }

    pub fn residual_decomposition(&self) -> Option<f64> {
        self.residual_decomposition
    }

    pub fn residual_symmetry(&self) -> Option<f64> {
        self.residual_symmetry
    }

    pub fn is_verified(&self) -> bool {
        self.verified
    }

    fn identity_unitaries(&self) -> bool {
        let id = DMatrix::<C64>::identity(self.dim, self.dim);
        self.unitaries.iter().all(|u| *u == id)
    }

    fn contains(&self, i: usize) -> bool {
        self.indices.binary_search(&i).is_ok()
    }
}

fn require_three_party(xi: &PureState) -> Result<usize> {
    let layout = xi.layout();
    let d = layout.dim_of(PARTIES[0])?;
    for l in &PARTIES[1..] {
        if layout.dim_of(l)? != d {
            return Err(Error::DimMismatch(format!(
                "{l} does not match the dimension {d} of {}",
                PARTIES[0]
            )));
        }
    }
    Ok(d)
}

fn apply_party_unitaries(xi: &PureState, cert: &ThreePartyCert) -> Result<PureState> {
    if cert.identity_unitaries() {
        return Ok(xi.clone());
    }
    let mut state = xi.clone();
    for (label, u) in PARTIES.iter().zip(&cert.unitaries) {
        state = apply_local_matrix(&state, &[label], u)?;
    }
    Ok(state)
}

/// Mask amplitudes so every party index lies inside (or outside) the
/// subspace; exact.
fn project_triple(phi: &PureState, cert: &ThreePartyCert, inside: bool) -> Result<PureState> {
    let layout = phi.layout();
    let positions: Vec<usize> = PARTIES
        .iter()
        .map(|l| layout.position(l))
        .collect::<Result<_>>()?;
    let mut amps = phi.amplitudes().to_vec();
    let mut multi = vec![0usize; layout.len()];
    for (flat, a) in amps.iter_mut().enumerate() {
        if *a == ZERO {
            continue;
        }
        layout.unflatten_into(flat, &mut multi);
        let keep = positions.iter().all(|&p| cert.contains(multi[p]) == inside);
        if !keep {
            *a = ZERO;
        }
    }
    PureState::fragment(layout.clone(), amps)
}

/// Split ξ into three-party common and uncommon fragments plus the
/// cross-term norm.
pub fn decompose_three(
    xi: &PureState,
    cert: &ThreePartyCert,
) -> Result<(PureState, PureState, f64)> {
    let d = require_three_party(xi)?;
    if cert.dim != d {
        return Err(Error::DimMismatch(format!(
            "certificate is for dimension {}, state has {d}",
            cert.dim
        )));
    }
    let phi = apply_party_unitaries(xi, cert)?;
    let common = project_triple(&phi, cert, true)?;
    let uncommon = project_triple(&phi, cert, false)?;
    let mut cross_sq = 0.0f64;
    for ((f, c), u) in phi
        .amplitudes()
        .iter()
        .zip(common.amplitudes())
        .zip(uncommon.amplitudes())
    {
        cross_sq += (f - c - u).norm_sqr();
    }
    Ok((common, uncommon, cross_sq.sqrt()))
}

/// Fill residuals and verdict: the decomposition residual is the cross-term
/// norm, and the symmetry residual is ‖ξ^com − rotate(ξ^com)‖₂.
pub fn verify_three_common(xi: &PureState, cert: &ThreePartyCert) -> Result<ThreePartyCert> {
    let (common, _, cross) = decompose_three(xi, cert)?;
    let rotated = rotate_final_state(&common, PARTIES)?;
    let symmetry = common.vector_distance(&rotated)?;
    let mut out = cert.clone();
    out.residual_decomposition = Some(cross);
    out.residual_symmetry = Some(symmetry);
    out.verified = cross <= tol::CERT_VERIFY && symmetry <= tol::CERT_VERIFY;
    Ok(out)
}

/// Three applications of the canonicalized routing unitary, one per party:
/// the three-party stretched state on `[A1, A2, A3, …, A1′, A2′, A3′]`.
/// `None` takes the no-common-subspace path; a full-space certificate
/// degenerates to ξ ⊗ |0⟩⊗³ in the rotated basis.
pub fn stretch_three(xi: &PureState, cert: Option<&ThreePartyCert>) -> Result<PureState> {
    xi.require_normalized()?;
    let d = require_three_party(xi)?;
    for ancilla in PRIMES {
        if xi.layout().contains(ancilla) {
            return Err(Error::LabelCollision(ancilla.to_string()));
        }
    }
    let (mut state, d_c) = match cert {
        Some(cert) => {
            if !cert.is_verified() {
                return Err(Error::NotCommon(
                    "three-party stretch requires a verified certificate".into(),
                ));
            }
            if cert.dim != d {
                return Err(Error::DimMismatch(format!(
                    "certificate is for dimension {}, state has {d}",
                    cert.dim
                )));
            }
            let phi = apply_party_unitaries(xi, cert)?;
            // Canonicalize each party with the shared subspace permutation.
            let index_cert = CommonSubspaceCert::from_indices(d, cert.indices.clone())?;
            let map = CanonicalMap::for_cert(&index_cert);
            let perm = match map {
                CanonicalMap::Permutation(p) => p,
                CanonicalMap::Rotation(_) => unreachable!("index certificate"),
            };
            let mut phi = phi;
            for label in PARTIES {
                phi = apply_basis_permutation(&phi, label, &perm)?;
            }
            (phi, cert.d_common())
        }
        None => (xi.clone(), 0),
    };
    for label in PRIMES {
        let ancilla = PureState::basis_state(SubsystemLayout::new(vec![(label, d)])?, &[0]);
        state = state.tensor(&ancilla)?;
    }
    for (party_label, prime_label) in PARTIES.iter().zip(PRIMES.iter()) {
        state = apply_stretch_map(&state, party_label, prime_label, d_c, false)?;
    }
    Ok(state)
}

/// Merge-and-send rate for the i-th starter:
/// uᵢ = S(Aᵢ|Aᵢ₊₁) + S(Aᵢ₊₁|Aᵢ₊₂) + S(Aᵢ₊₂).
pub fn rate_u_qsr(xi: &PureState, starter: usize) -> Result<f64> {
    if !(1..=3).contains(&starter) {
        return Err(Error::DomainError(format!(
            "starter {starter} not in 1..=3"
        )));
    }
    require_three_party(xi)?;
    let i = starter;
    let t1 = conditional_entropy(xi, &[party(i)], &[party(i + 1)])?;
    let t2 = conditional_entropy(xi, &[party(i + 1)], &[party(i + 2)])?;
    let t3 = entropy_of(xi, &[party(i + 2)])?;
    Ok(t1 + t2 + t3)
}

/// Subspace-rotation rate for the i-th starter, on the three-party
/// stretched state:
/// vᵢ = S(A′ᵢ|Aᵢ₊₁A′ᵢ₊₁) + S(A′ᵢ₊₁|Aᵢ₊₂A′ᵢ₊₂) + S(A′ᵢ₊₂|Aᵢ₊₃),
/// where Aᵢ₊₃ wraps to Aᵢ.
pub fn rate_v_qsr(xi: &PureState, cert: &ThreePartyCert, starter: usize) -> Result<f64> {
    if !(1..=3).contains(&starter) {
        return Err(Error::DomainError(format!(
            "starter {starter} not in 1..=3"
        )));
    }
    let stretched = stretch_three(xi, Some(cert))?;
    rate_v_on_stretched(&stretched, starter)
}

/// The vᵢ sum evaluated on an already-stretched state.
pub fn rate_v_on_stretched(stretched: &PureState, starter: usize) -> Result<f64> {
    if !(1..=3).contains(&starter) {
        return Err(Error::DomainError(format!(
            "starter {starter} not in 1..=3"
        )));
    }
    let i = starter;
    let t1 = conditional_entropy(stretched, &[prime(i)], &[party(i + 1), prime(i + 1)])?;
    let t2 = conditional_entropy(stretched, &[prime(i + 1)], &[party(i + 2), prime(i + 2)])?;
    let t3 = conditional_entropy(stretched, &[prime(i + 2)], &[party(i + 3)])?;
    Ok(t1 + t2 + t3)
}

/// The six rotation-task rates and their minima.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct QsrRateReport {
    /// Merge-and-send rates u₁..u₃.
    pub u: [f64; 3],
    /// Subspace-rotation rates v₁..v₃.
    pub v: [f64; 3],
    pub u_old_min: f64,
    pub v_new_min: f64,
}

impl QsrRateReport {
    fn from_rates(u: [f64; 3], v: [f64; 3]) -> Self {
        let u_old_min = u.iter().copied().fold(f64::INFINITY, f64::min);
        let v_new_min = v.iter().copied().fold(f64::INFINITY, f64::min);
        QsrRateReport {
            u,
            v,
            u_old_min,
            v_new_min,
        }
    }
}

/// Closed forms of all six rates for the four-party six-level family as
/// functions of the squared coefficients (0·log 0 = 0 throughout).
pub fn qsr_closed_forms(params: &ZetaParams) -> QsrRateReport {
    let [p0, p1, p2, p3] = params.squared();
    let s = p0 + p1;
    let u = [
        neg_p_log2_p_half(p0)
            + neg_p_log2_p(p1)
            + 2.0 * p1
            + neg_p_log2_p_half(p2)
            + neg_p_log2_p(p3),
        2.0 * neg_p_log2_p_half(p0) - neg_p_log2_p_half(s)
            + 2.0 * neg_p_log2_p_half(p1)
            + neg_p_log2_p_half(p2)
            + neg_p_log2_p(p3),
        neg_p_log2_p(p0)
            + 2.0 * p0
            + neg_p_log2_p_half(p1)
            + neg_p_log2_p_half(p2)
            + neg_p_log2_p(p3),
    ];
    let v = [
        neg_p_log2_p_half(p0) - neg_p_log2_p(s) + neg_p_log2_p(p1) + 2.0 * p1,
        2.0 * neg_p_log2_p_half(p0) - 2.0 * neg_p_log2_p(s) - s + 2.0 * neg_p_log2_p_half(p1),
        neg_p_log2_p(p0) + 2.0 * p0 - neg_p_log2_p(s) + neg_p_log2_p_half(p1),
    ];
    QsrRateReport::from_rates(u, v)
}

/// The six rates computed numerically: u from the family state itself, v
/// from its three-party stretched state under the span{|3⟩,|4⟩,|5⟩}
/// certificate.
pub fn qsr_numeric_report(params: &ZetaParams) -> Result<QsrRateReport> {
    let xi = make_xi(params)?;
    let cert = ThreePartyCert::from_indices(6, vec![3, 4, 5])?;
    let cert = verify_three_common(&xi, &cert)?;
    if !cert.is_verified() {
        return Err(Error::NotCommon(
            "span{3,4,5} failed to verify for the family state".into(),
        ));
    }
    let stretched = stretch_three(&xi, Some(&cert))?;
    let mut u = [0.0; 3];
    let mut v = [0.0; 3];
    for i in 1..=3 {
        u[i - 1] = rate_u_qsr(&xi, i)?;
        v[i - 1] = rate_v_on_stretched(&stretched, i)?;
    }
    Ok(QsrRateReport::from_rates(u, v))
}
