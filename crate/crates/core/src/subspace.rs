//! Common-subspace certificates, basis-subset search, and stretched-state
//! construction for the two-party exchange task.
//!
//! A subspace C of Alice's space is *common* for ψ on `ABR` when fixed local
//! unitaries V (on A) and W (on B) split the state into a component
//! supported on C⊗C that is invariant under the A↔B exchange, plus a
//! component supported on C⊥⊗C⊥ — with nothing in the mixed blocks. The
//! common component never needs exchanging; the *stretched* state routes the
//! uncommon component onto ancilla registers A′, B′ so only those ancillas
//! carry the part that must move.
//!
//! Certificates carry raw residuals so callers can apply stricter thresholds
//! than the default [`tol::CERT_VERIFY`].

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qlinalg::{apply_local_matrix, permute_basis, Operator, SubsystemLayout};
use crate::qstate::{exchange_final_state, PureState};
use crate::tol;

const ZERO: C64 = C64::new(0.0, 0.0);

/// The subspace payload of a certificate: a computational-basis subset or a
/// general orthonormal set.
#[derive(Clone, Debug)]
pub enum SubspaceBasis {
    /// span{|i⟩ : i ∈ indices}; sorted, unique.
    Indices(Vec<usize>),
    /// Arbitrary orthonormal vectors in the A-space.
    Vectors(Vec<DVector<C64>>),
}

/// A candidate common subspace with its common unitaries and verification
/// residuals.
#[derive(Clone, Debug)]
pub struct CommonSubspaceCert {
    dim: usize,
    basis: SubspaceBasis,
    v: DMatrix<C64>,
    w: DMatrix<C64>,
    residual_decomposition: Option<f64>,
    residual_symmetry: Option<f64>,
    verified: bool,
}

impl CommonSubspaceCert {
    /// Certificate for the span of a basis subset, with identity common
    /// unitaries.
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
        Ok(Self {
            dim,
            basis: SubspaceBasis::Indices(indices),
            v: DMatrix::identity(dim, dim),
            w: DMatrix::identity(dim, dim),
            residual_decomposition: None,
            residual_symmetry: None,
            verified: false,
        })
    }

    /// Certificate for the span of orthonormal vectors, with identity common
    /// unitaries.
    pub fn from_vectors(dim: usize, vectors: Vec<DVector<C64>>) -> Result<Self> {
        if vectors.is_empty() {
            return Err(Error::DomainError(
                "common subspace must be non-empty".into(),
            ));
        }
        for v in &vectors {
            if v.len() != dim {
                return Err(Error::DimMismatch(format!(
                    "basis vector has length {}, expected {dim}",
                    v.len()
                )));
            }
        }
        for (i, a) in vectors.iter().enumerate() {
            for (j, b) in vectors.iter().enumerate() {
                let expect = if i == j { 1.0 } else { 0.0 };
                let overlap: C64 = a.dotc(b);
                if (overlap - C64::new(expect, 0.0)).norm() > tol::CERT_BASIS {
                    return Err(Error::DomainError(
                        "basis vectors are not orthonormal".into(),
                    ));
                }
            }
        }
        Ok(Self {
            dim,
            basis: SubspaceBasis::Vectors(vectors),
            v: DMatrix::identity(dim, dim),
            w: DMatrix::identity(dim, dim),
            residual_decomposition: None,
            residual_symmetry: None,
            verified: false,
        })
    }

    /// Attach common unitaries V (on A) and W (on B). Resets any previous
    /// verification.
    pub fn with_unitaries(mut self, v: DMatrix<C64>, w: DMatrix<C64>) -> Result<Self> {
        for (name, m) in [("V", &v), ("W", &w)] {
            if m.nrows() != self.dim || m.ncols() != self.dim {
                return Err(Error::DimMismatch(format!(
                    "{name} is {}x{}, expected {}x{}",
                    m.nrows(),
                    m.ncols(),
                    self.dim,
                    self.dim
                )));
            }
            let residual = unitarity_residual(m);
            if residual > tol::CERT_BASIS {
                return Err(Error::DomainError(format!(
                    "{name} is not unitary (residual {residual:.3e})"
                )));
            }
        }
        self.v = v;
        self.w = w;
        self.verified = false;
        self.residual_decomposition = None;
        self.residual_symmetry = None;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Dimension d_C of the common subspace.
    pub fn d_common(&self) -> usize {
        match &self.basis {
            SubspaceBasis::Indices(ix) => ix.len(),
            SubspaceBasis::Vectors(vs) => vs.len(),
        }
    }

    pub fn is_full_space(&self) -> bool {
        self.d_common() == self.dim
    }

    pub fn basis(&self) -> &SubspaceBasis {
        &self.basis
    }

    /// Basis indices when this is a basis-subset certificate.
    pub fn indices(&self) -> Option<&[usize]> {
        match &self.basis {
            SubspaceBasis::Indices(ix) => Some(ix),
            SubspaceBasis::Vectors(_) => None,
        }
    }

    pub fn common_unitaries(&self) -> (&DMatrix<C64>, &DMatrix<C64>) {
        (&self.v, &self.w)
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
        self.v == DMatrix::identity(self.dim, self.dim)
            && self.w == DMatrix::identity(self.dim, self.dim)
    }

    fn index_in_subspace(&self, i: usize) -> bool {
        match &self.basis {
            SubspaceBasis::Indices(ix) => ix.binary_search(&i).is_ok(),
            SubspaceBasis::Vectors(_) => false,
        }
    }

    /// Projector Π_C as a dense matrix.
    fn projector(&self) -> DMatrix<C64> {
        match &self.basis {
            SubspaceBasis::Indices(ix) => {
                let mut p = DMatrix::zeros(self.dim, self.dim);
                for &i in ix {
                    p[(i, i)] = C64::new(1.0, 0.0);
                }
                p
            }
            SubspaceBasis::Vectors(vs) => {
                let mut p = DMatrix::zeros(self.dim, self.dim);
                for v in vs {
                    for i in 0..self.dim {
                        for j in 0..self.dim {
                            p[(i, j)] += v[i] * v[j].conj();
                        }
                    }
                }
                p
            }
        }
    }
}

fn unitarity_residual(m: &DMatrix<C64>) -> f64 {
    let d = m.nrows();
    let prod = m * m.adjoint();
    let mut res: f64 = 0.0;
    for i in 0..d {
        for j in 0..d {
            let expect = if i == j { C64::new(1.0, 0.0) } else { ZERO };
            res = res.max((prod[(i, j)] - expect).norm());
        }
    }
    res
}

fn require_two_party(psi: &PureState) -> Result<usize> {
    let layout = psi.layout();
    let da = layout.dim_of("A")?;
    let db = layout.dim_of("B")?;
    if da != db {
        return Err(Error::DimMismatch(format!(
            "A has dimension {da} but B has {db}"
        )));
    }
    Ok(da)
}

fn apply_common_unitaries(psi: &PureState, cert: &CommonSubspaceCert) -> Result<PureState> {
    if cert.identity_unitaries() {
        return Ok(psi.clone());
    }
    let rotated = apply_local_matrix(psi, &["A"], &cert.v)?;
    apply_local_matrix(&rotated, &["B"], &cert.w)
}

/// Project the A and B components of `phi` onto the subspace (`inside` =
/// true) or its complement, returning a fragment. Basis-subset certificates
/// mask amplitudes exactly.
fn project_block(phi: &PureState, cert: &CommonSubspaceCert, inside: bool) -> Result<PureState> {
    let layout = phi.layout();
    let pa = layout.position("A")?;
    let pb = layout.position("B")?;
    match &cert.basis {
        SubspaceBasis::Indices(_) => {
            let mut amps = phi.amplitudes().to_vec();
            let mut multi = vec![0usize; layout.len()];
            for (flat, a) in amps.iter_mut().enumerate() {
                if *a == ZERO {
                    continue;
                }
                layout.unflatten_into(flat, &mut multi);
                let keep = cert.index_in_subspace(multi[pa]) == inside
                    && cert.index_in_subspace(multi[pb]) == inside;
                if !keep {
                    *a = ZERO;
                }
            }
            PureState::fragment(layout.clone(), amps)
        }
        SubspaceBasis::Vectors(_) => {
            let p = cert.projector();
            let p = if inside {
                p
            } else {
                DMatrix::identity(cert.dim, cert.dim) - p
            };
            let projected = apply_local_matrix(phi, &["A"], &p)?;
            let projected = apply_local_matrix(&projected, &["B"], &p)?;
            PureState::fragment(layout.clone(), projected.amplitudes().to_vec())
        }
    }
}

/// Split ψ into its common and uncommon fragments under a certificate:
/// common = (Π_C ⊗ Π_C ⊗ 𝟙)(V ⊗ W ⊗ 𝟙)ψ, uncommon the same with complement
/// projectors. Also returns the leftover cross-term norm
/// ‖(V⊗W⊗𝟙)ψ − common − uncommon‖₂.
pub fn decompose(
    psi: &PureState,
    cert: &CommonSubspaceCert,
) -> Result<(PureState, PureState, f64)> {
    let d = require_two_party(psi)?;
    if cert.dim != d {
        return Err(Error::DimMismatch(format!(
            "certificate is for dimension {}, state has {d}",
            cert.dim
        )));
    }
    let phi = apply_common_unitaries(psi, cert)?;
    let common = project_block(&phi, cert, true)?;
    let uncommon = project_block(&phi, cert, false)?;
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

/// Fill in a certificate's residuals against a state and set its verdict:
/// the decomposition residual is the cross-term norm, the symmetry residual
/// is ‖ψ^com − exchange(ψ^com)‖₂, and the certificate verifies when both
/// are at most [`tol::CERT_VERIFY`].
pub fn verify_common(psi: &PureState, cert: &CommonSubspaceCert) -> Result<CommonSubspaceCert> {
    let (common, _, cross) = decompose(psi, cert)?;
    let exchanged = exchange_final_state(&common, "A", "B")?;
    let symmetry = common.vector_distance(&exchanged)?;
    let mut out = cert.clone();
    out.residual_decomposition = Some(cross);
    out.residual_symmetry = Some(symmetry);
    out.verified = cross <= tol::CERT_VERIFY && symmetry <= tol::CERT_VERIFY;
    Ok(out)
}

/// Exhaustively test every non-empty subset of the computational basis of A
/// (identity common unitaries) and return the verified certificates, sorted
/// by subspace dimension descending. Guarded to dimensions ≤ 12.
pub fn search_basis_common(psi: &PureState) -> Result<Vec<CommonSubspaceCert>> {
    let d = require_two_party(psi)?;
    if d > 12 {
        return Err(Error::TooLarge(format!(
            "basis-subset search over dimension {d} (> 12) is not attempted"
        )));
    }
    let mut found = Vec::new();
    for mask in 1u32..(1u32 << d) {
        let indices: Vec<usize> = (0..d).filter(|i| mask & (1 << i) != 0).collect();
        let cert = CommonSubspaceCert::from_indices(d, indices)?;
        let cert = verify_common(psi, &cert)?;
        if cert.is_verified() {
            found.push(cert);
        }
    }
    found.sort_by(|a, b| {
        b.d_common()
            .cmp(&a.d_common())
            .then_with(|| a.indices().cmp(&b.indices()))
    });
    Ok(found)
}

/// The ancilla-routing map on a basis pair (x, x′): swap |i, 0⟩ ↔ |d_C, i⟩
/// for every i ≥ d_C, identity on all other basis vectors. For d_C = d this
/// is the identity; for d_C = 0 it moves everything onto the ancilla.
pub(crate) fn stretch_pair_map(d_c: usize, x: usize, xp: usize) -> (usize, usize) {
    if xp == 0 && x >= d_c {
        (d_c, x)
    } else if x == d_c && xp >= d_c {
        (xp, 0)
    } else {
        (x, xp)
    }
}

/// The exact routing unitary on X ⊗ X′ for a front-aligned common subspace
/// of dimension `d_c`: the permutation swapping |i⟩|0⟩ with |d_C⟩|i⟩ for
/// each i ∈ {d_C, …, d−1}. Requires 1 ≤ d_C < d; it is its own inverse.
pub fn build_stretch_unitary(d: usize, d_c: usize) -> Result<Operator> {
    if d_c < 1 || d_c >= d {
        return Err(Error::DomainError(format!(
            "routing unitary needs 1 <= d_C < d; got d_C = {d_c}, d = {d}"
        )));
    }
    let layout = SubsystemLayout::new(vec![("X", d), ("X'", d)])?;
    let mut mat = DMatrix::zeros(d * d, d * d);
    for x in 0..d {
        for xp in 0..d {
            let (nx, nxp) = stretch_pair_map(d_c, x, xp);
            mat[(nx * d + nxp, x * d + xp)] = C64::new(1.0, 0.0);
        }
    }
    Operator::new(layout, mat)
}

/// How a certificate's subspace is brought to the front of the basis.
#[derive(Clone, Debug)]
pub(crate) enum CanonicalMap {
    /// old index ↦ new index; basis-subset certificates canonicalize by a
    /// pure relabeling.
    Permutation(Vec<usize>),
    /// A unitary Q with Q·vᵢ = eᵢ (orthonormal completion) for general
    /// vector certificates.
    Rotation(DMatrix<C64>),
}

impl CanonicalMap {
    pub(crate) fn for_cert(cert: &CommonSubspaceCert) -> CanonicalMap {
        match &cert.basis {
            SubspaceBasis::Indices(ix) => {
                let d = cert.dim;
                let mut perm = vec![usize::MAX; d];
                for (new, &old) in ix.iter().enumerate() {
                    perm[old] = new;
                }
                let mut next = ix.len();
                for slot in perm.iter_mut() {
                    if *slot == usize::MAX {
                        *slot = next;
                        next += 1;
                    }
                }
                CanonicalMap::Permutation(perm)
            }
            SubspaceBasis::Vectors(vs) => {
                let d = cert.dim;
                let mut columns: Vec<DVector<C64>> = vs.clone();
                // Greedy orthonormal completion from the standard basis.
                for j in 0..d {
                    if columns.len() == d {
                        break;
                    }
                    let mut w =
                        DVector::from_fn(d, |i, _| if i == j { C64::new(1.0, 0.0) } else { ZERO });
                    for u in &columns {
                        let overlap: C64 = u.dotc(&w);
                        w -= u * overlap;
                    }
                    let norm = w.norm();
                    if norm > 1e-6 {
                        w /= C64::new(norm, 0.0);
                        columns.push(w);
                    }
                }
                debug_assert_eq!(columns.len(), d);
                let b = DMatrix::from_columns(&columns);
                CanonicalMap::Rotation(b.adjoint())
            }
        }
    }

    pub(crate) fn apply(&self, psi: &PureState, label: &str) -> Result<PureState> {
        match self {
            CanonicalMap::Permutation(perm) => {
                crate::qlinalg::apply_basis_permutation(psi, label, perm)
            }
            CanonicalMap::Rotation(q) => apply_local_matrix(psi, &[label], q),
        }
    }

    pub(crate) fn apply_inverse(&self, psi: &PureState, label: &str) -> Result<PureState> {
        match self {
            CanonicalMap::Permutation(perm) => {
                let mut inv = vec![0usize; perm.len()];
                for (old, &new) in perm.iter().enumerate() {
                    inv[new] = old;
                }
                crate::qlinalg::apply_basis_permutation(psi, label, &inv)
            }
            CanonicalMap::Rotation(q) => apply_local_matrix(psi, &[label], &q.adjoint()),
        }
    }
}

/// A stretched state on `[A, B, …, A′, B′]` together with the certificate
/// it came from. Post-canonicalization the common fill state is ζ = |0⟩ and
/// the uncommon marker is η = |d_C⟩.
#[derive(Clone, Debug)]
pub struct StretchedState {
    pub state: PureState,
    pub cert: Option<CommonSubspaceCert>,
    pub zeta_index: usize,
    pub eta_index: usize,
}

impl StretchedState {
    pub fn d_common(&self) -> usize {
        self.cert.as_ref().map_or(0, |c| c.d_common())
    }
}

/// Apply the routing map to an (x, x′) label pair, exactly. The map is an
/// involution, so `inverse` only documents intent at call sites.
pub(crate) fn apply_stretch_map(
    psi: &PureState,
    x_label: &str,
    xp_label: &str,
    d_c: usize,
    inverse: bool,
) -> Result<PureState> {
    let layout = psi.layout();
    let px = layout.position(x_label)?;
    let pxp = layout.position(xp_label)?;
    let _ = inverse;
    permute_basis(psi, |multi, out| {
        out.copy_from_slice(multi);
        let (nx, nxp) = stretch_pair_map(d_c, multi[px], multi[pxp]);
        out[px] = nx;
        out[pxp] = nxp;
    })
}

pub(crate) struct StretchPipeline {
    pub canonical: Option<CanonicalMap>,
    pub d_common: usize,
}

/// Build the stretched state: apply V⊗W, canonicalize the subspace to the
/// front, adjoin A′ and B′ in |0⟩, and route the uncommon block onto the
/// ancillas. `None` means "no common subspace" (d_C = 0): the entire state
/// moves to A′B′. A full-space certificate degenerates to ψ ⊗ |0⟩|0⟩ in the
/// rotated basis.
pub fn stretch(psi: &PureState, cert: Option<&CommonSubspaceCert>) -> Result<StretchedState> {
    let (stretched, _pipeline) = stretch_with_pipeline(psi, cert)?;
    Ok(stretched)
}

pub(crate) fn stretch_with_pipeline(
    psi: &PureState,
    cert: Option<&CommonSubspaceCert>,
) -> Result<(StretchedState, StretchPipeline)> {
    psi.require_normalized()?;
    let d = require_two_party(psi)?;
    let layout = psi.layout();
    for ancilla in ["A'", "B'"] {
        if layout.contains(ancilla) {
            return Err(Error::LabelCollision(ancilla.to_string()));
        }
    }
    let (phi, canonical, d_c) = match cert {
        Some(cert) => {
            if !cert.is_verified() {
                return Err(Error::NotCommon(
                    "stretch requires a verified certificate".into(),
                ));
            }
            if cert.dim != d {
                return Err(Error::DimMismatch(format!(
                    "certificate is for dimension {}, state has {d}",
                    cert.dim
                )));
            }
            let phi = apply_common_unitaries(psi, cert)?;
            let map = CanonicalMap::for_cert(cert);
            let phi = map.apply(&phi, "A")?;
            let phi = map.apply(&phi, "B")?;
            (phi, Some(map), cert.d_common())
        }
        None => (psi.clone(), None, 0),
    };
    let ancilla_a = PureState::basis_state(SubsystemLayout::new(vec![("A'", d)])?, &[0]);
    let ancilla_b = PureState::basis_state(SubsystemLayout::new(vec![("B'", d)])?, &[0]);
    let joined = phi.tensor(&ancilla_a)?.tensor(&ancilla_b)?;
    let routed = apply_stretch_map(&joined, "A", "A'", d_c, false)?;
    let routed = apply_stretch_map(&routed, "B", "B'", d_c, false)?;
    let stretched = StretchedState {
        state: routed,
        cert: cert.cloned(),
        zeta_index: 0,
        eta_index: d_c,
    };
    Ok((
        stretched,
        StretchPipeline {
            canonical,
            d_common: d_c,
        },
    ))
}

// ---------------------------------------------------------------------------
// Certificate files
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct CertFile {
    subspace_indices: Vec<usize>,
    #[serde(rename = "V", skip_serializing_if = "Option::is_none", default)]
    v: Option<Vec<Vec<[f64; 2]>>>,
    #[serde(rename = "W", skip_serializing_if = "Option::is_none", default)]
    w: Option<Vec<Vec<[f64; 2]>>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    residual_decomposition: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    residual_symmetry: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    verified: Option<bool>,
}

fn matrix_to_rows(m: &DMatrix<C64>) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows())
        .map(|i| {
            (0..m.ncols())
                .map(|j| [m[(i, j)].re, m[(i, j)].im])
                .collect()
        })
        .collect()
}

fn rows_to_matrix(rows: &[Vec<[f64; 2]>]) -> Result<DMatrix<C64>> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(Error::ParseError("unitary matrix is not square".into()));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| {
        C64::new(rows[i][j][0], rows[i][j][1])
    }))
}

/// Write a basis-subset certificate (general vector certificates have no
/// file form). Identity unitaries are omitted; residuals are informational.
pub fn save_cert(cert: &CommonSubspaceCert, path: impl AsRef<Path>) -> Result<()> {
    let indices = cert.indices().ok_or_else(|| {
        Error::DomainError("only basis-subset certificates are serializable".into())
    })?;
    let file = CertFile {
        subspace_indices: indices.to_vec(),
        v: (!cert.identity_unitaries()).then(|| matrix_to_rows(&cert.v)),
        w: (!cert.identity_unitaries()).then(|| matrix_to_rows(&cert.w)),
        residual_decomposition: cert.residual_decomposition,
        residual_symmetry: cert.residual_symmetry,
        verified: Some(cert.verified),
    };
    let text = serde_json::to_string_pretty(&file).map_err(|e| Error::ParseError(e.to_string()))?;
    std::fs::write(path, text)?;
    Ok(())
}

/// Read a certificate file for an A-space of dimension `dim`. Identity
/// unitaries are assumed when V/W are omitted. Stored residuals and the
/// stored verdict are discarded: verification is state-dependent, so the
/// caller must run [`verify_common`] against the state it will use.
pub fn load_cert(path: impl AsRef<Path>, dim: usize) -> Result<CommonSubspaceCert> {
    let text = std::fs::read_to_string(path)?;
    parse_cert(&text, dim)
}

/// Parse a certificate from JSON text (see [`load_cert`]).
pub fn parse_cert(text: &str, dim: usize) -> Result<CommonSubspaceCert> {
    let file: CertFile =
        serde_json::from_str(text).map_err(|e| Error::ParseError(e.to_string()))?;
    let mut cert = CommonSubspaceCert::from_indices(dim, file.subspace_indices)
        .map_err(|e| Error::ParseError(e.to_string()))?;
    if file.v.is_some() || file.w.is_some() {
        let v = match &file.v {
            Some(rows) => rows_to_matrix(rows)?,
            None => DMatrix::identity(dim, dim),
        };
        let w = match &file.w {
            Some(rows) => rows_to_matrix(rows)?,
            None => DMatrix::identity(dim, dim),
        };
        cert = cert.with_unitaries(v, w)?;
    }
    Ok(cert)
}
