//! Evaluators for the bounds on quantum uncommon information, decomposition
//! descriptors for the referee-assisted converse, and the tightness-chain
//! report.
//!
//! For a tripartite pure state ψ on `A`, `B` and a reference (every other
//! label), the computable bounds are
//!
//! - `l1 = |S(B) − S(A)|` — entropy-difference converse;
//! - `l2_found` — the best value of `S(BR₁) − S(AR₁)` over a *restricted*
//!   family of reference-splitting isometries. Every family member is a
//!   valid converse bound, so the maximum is a certified lower estimate of
//!   the true supremum (which has no computable form);
//! - `l_new` — the referee-assisted converse evaluated on one *declared*
//!   reversible decomposition (constructing decompositions from ψ is not a
//!   solved problem; the six-level family ships its known one);
//! - `u_new = S(R|A)` on the stretched state of a verified common-subspace
//!   certificate — the subspace-exchange achievable bound;
//! - `u1 = S(AB)` — the merge-and-send achievable bound.
//!
//! The report checks the chain `l1 ≤ l_new ≤ u_new ≤ u1` pairwise with
//! slack [`tol::CHAIN_SLACK`].

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::qlinalg::{apply_local_unitary, conditional_entropy, entropy_of, SubsystemLayout};
use crate::qstate::{epr_pair, PureState, ZetaParams};
use crate::subspace::{stretch, CommonSubspaceCert};
use crate::tol;

/// −p·log₂(p), with 0·log 0 = 0.
pub(crate) fn neg_p_log2_p(p: f64) -> f64 {
    if p > 0.0 {
        -p * p.log2()
    } else {
        0.0
    }
}

/// −p·log₂(p/2), with the p = 0 limit 0.
pub(crate) fn neg_p_log2_p_half(p: f64) -> f64 {
    if p > 0.0 {
        -p * (p / 2.0).log2()
    } else {
        0.0
    }
}

fn reference_labels(psi: &PureState) -> Vec<String> {
    psi.layout().complement(&["A", "B"])
}

/// l₁ = |S(B) − S(A)|.
pub fn bound_l1(psi: &PureState) -> Result<f64> {
    let s_a = entropy_of(psi, &["A"])?;
    let s_b = entropy_of(psi, &["B"])?;
    Ok((s_b - s_a).abs())
}

/// u₁ = S(AB).
pub fn bound_u1(psi: &PureState) -> Result<f64> {
    entropy_of(psi, &["A", "B"])
}

/// One member of the restricted isometry family for the l₂ evaluator: a
/// splitting of the joint reference into two registers.
#[derive(Clone, Debug)]
pub enum IsometrySplit {
    /// Route each joint reference basis index to register R₁ (if listed) or
    /// R₂, after an optional rotation of the reference space. This is an
    /// exact isometry into R₁ ⊗ R₂ with flag states marking the inactive
    /// register.
    ByIndex {
        r1: Vec<usize>,
        pre_rotation: Option<DMatrix<C64>>,
    },
    /// Assign whole reference labels to R₁ (the rest to R₂); the relabeling
    /// isometry is exact because the reference already factors.
    ByLabel { r1: Vec<String> },
}

impl IsometrySplit {
    pub fn by_index(r1: Vec<usize>) -> Self {
        IsometrySplit::ByIndex {
            r1,
            pre_rotation: None,
        }
    }

    pub fn by_label<S: Into<String>>(r1: Vec<S>) -> Self {
        IsometrySplit::ByLabel {
            r1: r1.into_iter().map(Into::into).collect(),
        }
    }
}

fn fresh_label(layout: &SubsystemLayout, base: &str) -> String {
    let mut name = base.to_string();
    while layout.contains(&name) {
        name.push('~');
    }
    name
}

/// Evaluate S(BR₁) − S(AR₁) for one split.
fn evaluate_split(psi: &PureState, split: &IsometrySplit) -> Result<f64> {
    let refs = reference_labels(psi);
    let ref_strs: Vec<&str> = refs.iter().map(|s| s.as_str()).collect();
    match split {
        IsometrySplit::ByLabel { r1 } => {
            for l in r1 {
                if !refs.contains(l) {
                    return Err(Error::UnknownLabel(format!("{l} is not a reference label")));
                }
            }
            let mut b_side: Vec<&str> = vec!["B"];
            let mut a_side: Vec<&str> = vec!["A"];
            b_side.extend(r1.iter().map(|s| s.as_str()));
            a_side.extend(r1.iter().map(|s| s.as_str()));
            Ok(entropy_of(psi, &b_side)? - entropy_of(psi, &a_side)?)
        }
        IsometrySplit::ByIndex { r1, pre_rotation } => {
            let layout = psi.layout();
            let joint_dim: usize = refs
                .iter()
                .map(|l| layout.dim_of(l).expect("reference label exists"))
                .product();
            let psi = match pre_rotation {
                Some(u) => {
                    if u.nrows() != joint_dim || u.ncols() != joint_dim {
                        return Err(Error::DimMismatch(format!(
                            "pre-rotation is {}x{}, reference dimension is {joint_dim}",
                            u.nrows(),
                            u.ncols()
                        )));
                    }
                    let prod = u * u.adjoint();
                    let id = DMatrix::<C64>::identity(joint_dim, joint_dim);
                    if (prod - id).norm() > 1e-8 {
                        return Err(Error::DomainError("pre-rotation is not unitary".into()));
                    }
                    apply_local_unitary(psi, &ref_strs, u)?
                }
                None => psi.clone(),
            };
            if refs.is_empty() {
                return Ok(entropy_of(&psi, &["B"])? - entropy_of(&psi, &["A"])?);
            }

            let mut s1: Vec<usize> = r1.clone();
            s1.sort_unstable();
            s1.dedup();
            if let Some(&max) = s1.last() {
                if max >= joint_dim {
                    return Err(Error::DomainError(format!(
                        "split index {max} out of range for reference dimension {joint_dim}"
                    )));
                }
            }
            let s2: Vec<usize> = (0..joint_dim).filter(|k| !s1.contains(k)).collect();

            let layout = psi.layout();
            let keep = layout.complement(&ref_strs);
            let keep_strs: Vec<&str> = keep.iter().map(|s| s.as_str()).collect();
            let r1_label = fresh_label(layout, "R1");
            let r2_label = fresh_label(layout, "R2");
            let mut entries: Vec<(String, usize)> = layout
                .entries()
                .iter()
                .filter(|(l, _)| keep_strs.contains(&l.as_str()))
                .cloned()
                .collect();
            entries.push((r1_label.clone(), s1.len() + 1));
            entries.push((r2_label.clone(), s2.len() + 1));
            let new_layout = SubsystemLayout::new(entries)?;

            // Joint reference index k becomes (pos_in_s1(k), 0) when k ∈ S₁,
            // else (|S₁|, 1 + pos_in_s2(k)); distinct k land on orthonormal
            // images, so this is an isometry.
            let strides = layout.strides();
            let dims = layout.dims();
            let ref_positions: Vec<usize> = refs
                .iter()
                .map(|l| layout.position(l).expect("reference label exists"))
                .collect();
            let keep_positions: Vec<usize> = (0..layout.len())
                .filter(|p| !ref_positions.contains(p))
                .collect();
            let new_strides = new_layout.strides();
            let mut amps = vec![C64::new(0.0, 0.0); new_layout.total_dim()];
            for (flat, &a) in psi.amplitudes().iter().enumerate() {
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                let mut k = 0usize;
                for &p in &ref_positions {
                    k = k * dims[p] + (flat / strides[p]) % dims[p];
                }
                let (i1, i2) = match s1.binary_search(&k) {
                    Ok(pos) => (pos, 0usize),
                    Err(_) => {
                        let pos = s2.binary_search(&k).expect("k is in s1 or s2");
                        (s1.len(), 1 + pos)
                    }
                };
                let mut new_flat = 0usize;
                for (slot, &p) in keep_positions.iter().enumerate() {
                    new_flat += ((flat / strides[p]) % dims[p]) * new_strides[slot];
                }
                new_flat += i1 * new_strides[keep_positions.len()];
                new_flat += i2 * new_strides[keep_positions.len() + 1];
                amps[new_flat] = a;
            }
            let split_state = PureState::new(new_layout, amps)?;
            let s_br1 = entropy_of(&split_state, &["B", r1_label.as_str()])?;
            let s_ar1 = entropy_of(&split_state, &["A", r1_label.as_str()])?;
            Ok(s_br1 - s_ar1)
        }
    }
}

/// The default split family: every basis partition of the joint reference
/// when its dimension is at most 12 (this includes the two trivial splits,
/// which reproduce ±(S(B) − S(A))), plus every label partition when the
/// reference has several labels. Larger references fall back to the trivial
/// and label splits only.
pub fn default_splits(psi: &PureState) -> Vec<IsometrySplit> {
    let refs = reference_labels(psi);
    let layout = psi.layout();
    let joint_dim: usize = refs
        .iter()
        .map(|l| layout.dim_of(l).expect("reference label exists"))
        .product();
    let mut splits = Vec::new();
    if joint_dim <= 12 {
        for mask in 0u32..(1u32 << joint_dim) {
            let r1: Vec<usize> = (0..joint_dim).filter(|k| mask & (1 << k) != 0).collect();
            splits.push(IsometrySplit::by_index(r1));
        }
    } else {
        splits.push(IsometrySplit::by_index(Vec::new()));
        splits.push(IsometrySplit::by_index((0..joint_dim).collect()));
    }
    if refs.len() >= 2 && refs.len() <= 12 {
        for mask in 1u32..((1u32 << refs.len()) - 1) {
            let r1: Vec<String> = refs
                .iter()
                .enumerate()
                .filter(|(k, _)| mask & (1 << k) != 0)
                .map(|(_, l)| l.clone())
                .collect();
            splits.push(IsometrySplit::ByLabel { r1 });
        }
    }
    splits
}

/// l₂ estimate: the maximum of S(BR₁) − S(AR₁) over the supplied splits.
/// Any single split already lower-bounds the uncommon information, so the
/// maximum is a certified lower estimate of the unrestricted supremum.
pub fn bound_l2(psi: &PureState, splits: &[IsometrySplit]) -> Result<f64> {
    if splits.is_empty() {
        return Err(Error::EmptyFamily);
    }
    let mut best = f64::NEG_INFINITY;
    for split in splits {
        best = best.max(evaluate_split(psi, split)?);
    }
    Ok(best)
}

/// A declared reversible-decomposition descriptor: rates r₁..r₄ and the
/// left / bottom / right / center component states on their conventional
/// registers (left on A₁R₁, bottom on A₂B₂, right on R₂B₁, center on
/// A₃R₃R₄B₃).
#[derive(Clone, Debug)]
pub struct DecompositionSpec {
    rates: [f64; 4],
    phi_l: PureState,
    phi_b: PureState,
    phi_r: PureState,
    phi_c: PureState,
}

impl DecompositionSpec {
    pub fn new(
        rates: [f64; 4],
        phi_l: PureState,
        phi_b: PureState,
        phi_r: PureState,
        phi_c: PureState,
    ) -> Result<Self> {
        if rates.iter().any(|r| !r.is_finite() || *r < 0.0) {
            return Err(Error::DomainError(
                "decomposition rates must be non-negative and finite".into(),
            ));
        }
        for (state, labels) in [
            (&phi_l, &["A1"][..]),
            (&phi_b, &["A2", "B2"][..]),
            (&phi_r, &["B1"][..]),
            (&phi_c, &["A3", "R3", "B3"][..]),
        ] {
            state.require_normalized()?;
            for l in labels {
                if !state.layout().contains(l) {
                    return Err(Error::UnknownLabel(format!(
                        "decomposition component is missing label {l}"
                    )));
                }
            }
        }
        Ok(Self {
            rates,
            phi_l,
            phi_b,
            phi_r,
            phi_c,
        })
    }

    pub fn rates(&self) -> [f64; 4] {
        self.rates
    }

    pub fn components(&self) -> (&PureState, &PureState, &PureState, &PureState) {
        (&self.phi_l, &self.phi_b, &self.phi_r, &self.phi_c)
    }
}

/// The referee-assisted converse evaluated on one declared decomposition:
///
/// r₁·S(A₁) on the left state + r₃·S(B₁) on the right state +
/// r₄·(S(B₃R₃) − S(A₃R₃)) on the center state.
///
/// May be negative for adversarial descriptors; the supremum over all
/// decompositions picks the best, this evaluates one.
pub fn bound_l_new(spec: &DecompositionSpec) -> Result<f64> {
    let [r1, _r2, r3, r4] = spec.rates;
    let (phi_l, _phi_b, phi_r, phi_c) = spec.components();
    let term_l = r1 * entropy_of(phi_l, &["A1"])?;
    let term_r = r3 * entropy_of(phi_r, &["B1"])?;
    let term_c = if r4 > 0.0 {
        r4 * (entropy_of(phi_c, &["B3", "R3"])? - entropy_of(phi_c, &["A3", "R3"])?)
    } else {
        0.0
    };
    Ok(term_l + term_r + term_c)
}

/// The known reversible decomposition of the six-level family: EPR pairs at
/// rates (c₁², c₂², c₀²) for the left/bottom/right components and a GHZ
/// state at the Shannon-entropy rate −Σ cᵢ² log₂ cᵢ².
pub fn make_zeta_decomposition(params: &ZetaParams) -> Result<DecompositionSpec> {
    let [p0, p1, p2, p3] = params.squared();
    let r4 = neg_p_log2_p(p0) + neg_p_log2_p(p1) + neg_p_log2_p(p2) + neg_p_log2_p(p3);
    let phi_l = epr_pair("A1", "R1")?;
    let phi_b = epr_pair("A2", "B2")?;
    let phi_r = epr_pair("R2", "B1")?;
    let layout = SubsystemLayout::new(vec![("A3", 2), ("R3", 2), ("R4", 1), ("B3", 2)])?;
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let phi_c = PureState::from_indexed(
        layout,
        &[
            (&[0, 0, 0, 0], C64::new(h, 0.0)),
            (&[1, 1, 0, 1], C64::new(h, 0.0)),
        ],
    )?;
    DecompositionSpec::new([p1, p2, p0, r4], phi_l, phi_b, phi_r, phi_c)
}

/// The subspace-exchange achievable bound u_new = S(R|A) on the stretched
/// state of a verified certificate (`None` takes the no-common-subspace
/// path, reproducing merge-and-send). Cross-checks the merge-rate identity
/// S(A′|BB′) + S(B′|A) = S(R|A) to [`tol::RATE_IDENTITY`].
pub fn bound_u_new(psi: &PureState, cert: Option<&CommonSubspaceCert>) -> Result<f64> {
    let stretched = stretch(psi, cert)?;
    let state = &stretched.state;
    let refs = state.layout().complement(&["A", "B", "A'", "B'"]);
    let ref_strs: Vec<&str> = refs.iter().map(|s| s.as_str()).collect();
    let u = conditional_entropy(state, &ref_strs, &["A"])?;
    let merge_a = conditional_entropy(state, &["A'"], &["B", "B'"])?;
    let merge_b = conditional_entropy(state, &["B'"], &["A"])?;
    let identity_gap = (merge_a + merge_b - u).abs();
    if identity_gap > tol::RATE_IDENTITY {
        return Err(Error::ProtocolError(format!(
            "merge-rate identity violated: S(A'|BB') + S(B'|A) = {} but S(R|A) = {u}",
            merge_a + merge_b
        )));
    }
    Ok(u)
}

/// Closed forms of the four six-level-family bounds as functions of the
/// squared coefficients.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ZetaClosedBounds {
    pub l1: f64,
    pub l_new: f64,
    pub u_new: f64,
    pub u1: f64,
}

pub fn zeta_closed_bounds(params: &ZetaParams) -> ZetaClosedBounds {
    let [p0, p1, p2, p3] = params.squared();
    ZetaClosedBounds {
        l1: (p0 - p1).abs(),
        l_new: p0 + p1,
        u_new: neg_p_log2_p_half(p0) + neg_p_log2_p_half(p1) - neg_p_log2_p(p0 + p1),
        u1: neg_p_log2_p_half(p0) + neg_p_log2_p_half(p1) + neg_p_log2_p(p2) + neg_p_log2_p(p3),
    }
}

/// On-disk decomposition descriptor: either the family shorthand
/// `{"zeta_params": [c0, c1, c2, c3]}` (expands through
/// [`make_zeta_decomposition`]) or explicit `rates` plus the four component
/// states in the state-file format.
#[derive(serde::Deserialize)]
#[serde(untagged)]
enum DecompositionSpecFile {
    Zeta {
        zeta_params: [f64; 4],
    },
    Explicit {
        rates: [f64; 4],
        phi_l: crate::qstate::StateFile,
        phi_b: crate::qstate::StateFile,
        phi_r: crate::qstate::StateFile,
        phi_c: crate::qstate::StateFile,
    },
}

/// Parse a decomposition descriptor from JSON text.
pub fn parse_decomposition_spec(text: &str) -> Result<DecompositionSpec> {
    let file: DecompositionSpecFile =
        serde_json::from_str(text).map_err(|e| Error::ParseError(e.to_string()))?;
    match file {
        DecompositionSpecFile::Zeta { zeta_params } => {
            make_zeta_decomposition(&ZetaParams::new(zeta_params)?)
        }
        DecompositionSpecFile::Explicit {
            rates,
            phi_l,
            phi_b,
            phi_r,
            phi_c,
        } => DecompositionSpec::new(
            rates,
            phi_l.into_state()?,
            phi_b.into_state()?,
            phi_r.into_state()?,
            phi_c.into_state()?,
        ),
    }
}

/// Read a decomposition descriptor file (see [`parse_decomposition_spec`]).
pub fn load_decomposition_spec(path: impl AsRef<std::path::Path>) -> Result<DecompositionSpec> {
    let text = std::fs::read_to_string(path)?;
    parse_decomposition_spec(&text)
}

/// All bound values for one state, with provenance per field and the
/// tightness-chain verdict.
#[derive(Clone, Debug, Serialize)]
pub struct BoundReport {
    pub l1: f64,
    pub l2_found: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l_new: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub u_new: Option<f64>,
    pub u1: f64,
    pub provenance: Provenance,
    pub chain_ok: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct Provenance {
    pub l1: String,
    pub l2_found: String,
    pub l_new: String,
    pub u_new: String,
    pub u1: String,
}

/// Pairwise ordering over the present members of (l1, l_new, u_new, u1),
/// each inequality allowed slack [`tol::CHAIN_SLACK`].
fn chain_holds(l1: f64, l_new: Option<f64>, u_new: Option<f64>, u1: f64) -> bool {
    let chain: Vec<f64> = [Some(l1), l_new, u_new, Some(u1)]
        .into_iter()
        .flatten()
        .collect();
    chain
        .iter()
        .enumerate()
        .all(|(i, &x)| chain[i..].iter().all(|&y| x <= y + tol::CHAIN_SLACK))
}

/// Evaluate every computable bound. `splits` defaults to
/// [`default_splits`]; `cert` and `dspec` feed the subspace-exchange and
/// referee-assisted bounds when present.
pub fn full_report(
    psi: &PureState,
    cert: Option<&CommonSubspaceCert>,
    dspec: Option<&DecompositionSpec>,
    splits: Option<&[IsometrySplit]>,
) -> Result<BoundReport> {
    let l1 = bound_l1(psi)?;
    let u1 = bound_u1(psi)?;
    let owned_default;
    let split_family: &[IsometrySplit] = match splits {
        Some(s) => s,
        None => {
            owned_default = default_splits(psi);
            &owned_default
        }
    };
    let l2_found = bound_l2(psi, split_family)?;
    let l_new = dspec.map(bound_l_new).transpose()?;
    let u_new = cert.map(|c| bound_u_new(psi, Some(c))).transpose()?;
    let chain_ok = chain_holds(l1, l_new, u_new, u1);
    let provenance = Provenance {
        l1: "numeric: |S(B) - S(A)|".into(),
        l2_found: format!(
            "numeric: max over {} reference splits; certified lower estimate of \
             the unrestricted supremum (gap unquantified)",
            split_family.len()
        ),
        l_new: match l_new {
            Some(_) => "numeric: declared reversible decomposition".into(),
            None => "not computed: no decomposition descriptor supplied".into(),
        },
        u_new: match (u_new, cert) {
            (Some(_), Some(c)) => {
                format!("numeric: S(R|A) on stretched state, d_C = {}", c.d_common())
            }
            _ => "not computed: no certificate supplied (merge-and-send achieves u1)".into(),
        },
        u1: "numeric: S(AB)".into(),
    };
    Ok(BoundReport {
        l1,
        l2_found,
        l_new,
        u_new,
        u1,
        provenance,
        chain_ok,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::{make_named, make_zeta, zeta_from_x, NamedState};
    use crate::subspace::verify_common;
    use crate::testkit;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn zeta_cert(zeta: &PureState) -> CommonSubspaceCert {
        let cert = CommonSubspaceCert::from_indices(6, vec![3, 4, 5]).unwrap();
        verify_common(zeta, &cert).unwrap()
    }

    fn random_params(rng: &mut StdRng) -> ZetaParams {
        let raw: [f64; 4] = [rng.gen(), rng.gen(), rng.gen(), rng.gen()];
        let norm: f64 = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
        ZetaParams::new([raw[0] / norm, raw[1] / norm, raw[2] / norm, raw[3] / norm]).unwrap()
    }

    #[test]
    fn l1_values() {
        let ghz = make_named(NamedState::Ghz3).unwrap();
        assert!(bound_l1(&ghz).unwrap().abs() < 1e-12);
        let z0 = make_zeta(&zeta_from_x(0.0).unwrap()).unwrap();
        assert!((bound_l1(&z0).unwrap() - 0.25).abs() < 1e-9);
        let z1 = make_zeta(&zeta_from_x(1.0).unwrap()).unwrap();
        assert!((bound_l1(&z1).unwrap() - 0.125).abs() < 1e-9);
    }

    #[test]
    fn u1_values() {
        let z0 = make_zeta(&zeta_from_x(0.0).unwrap()).unwrap();
        assert!((bound_u1(&z0).unwrap() - 1.95444).abs() < 1e-4);
        let z1 = make_zeta(&zeta_from_x(1.0).unwrap()).unwrap();
        assert!((bound_u1(&z1).unwrap() - 2.53064).abs() < 1e-4);
        let pe = make_named(NamedState::ProductEpr).unwrap();
        assert!((bound_u1(&pe).unwrap() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn u_new_values() {
        let z0 = make_zeta(&zeta_from_x(0.0).unwrap()).unwrap();
        let u0 = bound_u_new(&z0, Some(&zeta_cert(&z0))).unwrap();
        assert!((u0 - 1.95444).abs() < 1e-4);
        assert!(
            (u0 - bound_u1(&z0).unwrap()).abs() < 1e-9,
            "bounds coincide at x=0"
        );

        let z1 = make_zeta(&zeta_from_x(1.0).unwrap()).unwrap();
        let u1v = bound_u_new(&z1, Some(&zeta_cert(&z1))).unwrap();
        assert!((u1v - 1.23185).abs() < 1e-4);

        let ghz = make_named(NamedState::Ghz3).unwrap();
        let cert = CommonSubspaceCert::from_indices(2, vec![0, 1]).unwrap();
        let cert = verify_common(&ghz, &cert).unwrap();
        assert!(bound_u_new(&ghz, Some(&cert)).unwrap().abs() < 1e-9);
    }

    #[test]
    fn u_new_without_cert_reduces_to_u1() {
        let zeta = make_zeta(&zeta_from_x(0.42).unwrap()).unwrap();
        let u_new = bound_u_new(&zeta, None).unwrap();
        assert!((u_new - bound_u1(&zeta).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn l2_with_trivial_splits_equals_l1() {
        let zeta = make_zeta(&zeta_from_x(0.6).unwrap()).unwrap();
        let trivial = vec![
            IsometrySplit::by_index(Vec::new()),
            IsometrySplit::by_index((0..6).collect()),
        ];
        let l2 = bound_l2(&zeta, &trivial).unwrap();
        assert!((l2 - bound_l1(&zeta).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn l2_label_split_pins_product_epr() {
        let pe = make_named(NamedState::ProductEpr).unwrap();
        let split = IsometrySplit::by_label(vec!["R1"]);
        let value = evaluate_split(&pe, &split).unwrap();
        assert!((value - 2.0).abs() < 1e-9);
        let l2 = bound_l2(&pe, &default_splits(&pe)).unwrap();
        assert!((l2 - 2.0).abs() < 1e-9);
    }

    #[test]
    fn l2_on_ghz_is_zero_over_all_partitions() {
        let ghz = make_named(NamedState::Ghz3).unwrap();
        for mask in 0u32..4 {
            let r1: Vec<usize> = (0..2).filter(|k| mask & (1 << k) != 0).collect();
            let v = evaluate_split(&ghz, &IsometrySplit::by_index(r1)).unwrap();
            assert!(v.abs() < 1e-9, "partition mask {mask} gave {v}");
        }
        assert!(bound_l2(&ghz, &default_splits(&ghz)).unwrap().abs() < 1e-9);
    }

    #[test]
    fn l2_rejects_empty_family() {
        let ghz = make_named(NamedState::Ghz3).unwrap();
        assert!(matches!(bound_l2(&ghz, &[]), Err(Error::EmptyFamily)));
    }

    #[test]
    fn l2_found_dominates_l1_on_random_states() {
        let mut rng = StdRng::seed_from_u64(31);
        for _ in 0..40 {
            let layout = SubsystemLayout::new(vec![("A", 2), ("B", 2), ("R", 3)]).unwrap();
            let psi = testkit::random_pure_state(&mut rng, layout);
            let l1 = bound_l1(&psi).unwrap();
            let l2 = bound_l2(&psi, &default_splits(&psi)).unwrap();
            assert!(l2 >= l1 - 1e-9, "l2 {l2} < l1 {l1}");
        }
    }

    #[test]
    fn l_new_of_zeta_decomposition_is_p0_plus_p1() {
        let mut rng = StdRng::seed_from_u64(37);
        for _ in 0..100 {
            let params = random_params(&mut rng);
            let [p0, p1, _, _] = params.squared();
            let spec = make_zeta_decomposition(&params).unwrap();
            let value = bound_l_new(&spec).unwrap();
            assert!((value - (p0 + p1)).abs() < 1e-9);
        }
    }

    #[test]
    fn ghz_component_terms_cancel() {
        let params = zeta_from_x(0.8).unwrap();
        let spec = make_zeta_decomposition(&params).unwrap();
        let (_, _, _, phi_c) = spec.components();
        let s_b3r3 = entropy_of(phi_c, &["B3", "R3"]).unwrap();
        let s_a3r3 = entropy_of(phi_c, &["A3", "R3"]).unwrap();
        assert!((s_b3r3 - 1.0).abs() < 1e-9);
        assert!((s_a3r3 - 1.0).abs() < 1e-9);
    }

    fn ghz_center_component() -> PureState {
        make_zeta_decomposition(&zeta_from_x(0.5).unwrap())
            .unwrap()
            .components()
            .3
            .clone()
    }

    #[test]
    fn l_new_of_product_epr_spec_is_two() {
        let spec = DecompositionSpec::new(
            [1.0, 0.0, 1.0, 0.0],
            epr_pair("A1", "R1").unwrap(),
            epr_pair("A2", "B2").unwrap(),
            epr_pair("R2", "B1").unwrap(),
            ghz_center_component(),
        )
        .unwrap();
        assert!((bound_l_new(&spec).unwrap() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn l_new_with_only_bottom_rate_is_zero() {
        let spec = DecompositionSpec::new(
            [0.0, 1.0, 0.0, 0.0],
            epr_pair("A1", "R1").unwrap(),
            epr_pair("A2", "B2").unwrap(),
            epr_pair("R2", "B1").unwrap(),
            ghz_center_component(),
        )
        .unwrap();
        assert!(bound_l_new(&spec).unwrap().abs() < 1e-12);
    }

    #[test]
    fn zeta_decomposition_rates() {
        let p = zeta_from_x(0.0).unwrap();
        let spec = make_zeta_decomposition(&p).unwrap();
        let [r1, r2, r3, r4] = spec.rates();
        assert!((r1 - 3.0 / 8.0).abs() < 1e-12);
        assert_eq!(r2, 0.0);
        assert!((r3 - 5.0 / 8.0).abs() < 1e-12);
        assert!((r4 - 0.95443).abs() < 1e-4);

        let p = zeta_from_x(1.0).unwrap();
        let spec = make_zeta_decomposition(&p).unwrap();
        assert!((spec.rates()[3] - 1.90564).abs() < 1e-4);
    }

    #[test]
    fn closed_forms_match_numerics_on_a_coarse_grid() {
        for i in 0..=10 {
            let x = i as f64 / 10.0;
            let params = zeta_from_x(x).unwrap();
            let closed = zeta_closed_bounds(&params);
            let zeta = make_zeta(&params).unwrap();
            let cert = zeta_cert(&zeta);
            assert!((closed.l1 - bound_l1(&zeta).unwrap()).abs() < 1e-9);
            assert!(
                (closed.l_new - bound_l_new(&make_zeta_decomposition(&params).unwrap()).unwrap())
                    .abs()
                    < 1e-9
            );
            assert!((closed.u_new - bound_u_new(&zeta, Some(&cert)).unwrap()).abs() < 1e-9);
            assert!((closed.u1 - bound_u1(&zeta).unwrap()).abs() < 1e-9);
        }
    }

    #[test]
    fn full_report_chains_on_zeta_midpoint() {
        let params = zeta_from_x(0.5).unwrap();
        let zeta = make_zeta(&params).unwrap();
        let cert = zeta_cert(&zeta);
        let spec = make_zeta_decomposition(&params).unwrap();
        let report = full_report(&zeta, Some(&cert), Some(&spec), None).unwrap();
        assert!(report.chain_ok);
        assert!(report.l1 <= report.l_new.unwrap() + 1e-7);
        assert!(report.l_new.unwrap() <= report.u_new.unwrap() + 1e-7);
        assert!(report.u_new.unwrap() <= report.u1 + 1e-7);
    }

    #[test]
    fn full_report_pins_product_epr() {
        let pe = make_named(NamedState::ProductEpr).unwrap();
        let spec = DecompositionSpec::new(
            [1.0, 0.0, 1.0, 0.0],
            epr_pair("A1", "R1").unwrap(),
            epr_pair("A2", "B2").unwrap(),
            epr_pair("R2", "B1").unwrap(),
            ghz_center_component(),
        )
        .unwrap();
        let report = full_report(&pe, None, Some(&spec), None).unwrap();
        assert!((report.l_new.unwrap() - 2.0).abs() < 1e-9);
        assert!((report.u1 - 2.0).abs() < 1e-9);
        assert!(report.chain_ok);
    }

    #[test]
    fn full_report_pins_ghz_at_zero() {
        let ghz = make_named(NamedState::Ghz3).unwrap();
        let cert = CommonSubspaceCert::from_indices(2, vec![0, 1]).unwrap();
        let cert = verify_common(&ghz, &cert).unwrap();
        let report = full_report(&ghz, Some(&cert), None, None).unwrap();
        assert!(report.l1.abs() < 1e-9);
        assert!(report.u_new.unwrap().abs() < 1e-9);
        assert!(report.chain_ok);
    }

    #[test]
    fn decomposition_spec_files_parse_in_both_forms() {
        let shorthand = r#"{ "zeta_params": [0.5, 0.5, 0.5, 0.5] }"#;
        let spec = parse_decomposition_spec(shorthand).unwrap();
        assert!((bound_l_new(&spec).unwrap() - 0.5).abs() < 1e-12);

        let h = std::f64::consts::FRAC_1_SQRT_2;
        let explicit = format!(
            r#"{{
                "rates": [1.0, 0.0, 1.0, 0.0],
                "phi_l": {{"systems": [{{"label": "A1", "dim": 2}}, {{"label": "R1", "dim": 2}}],
                           "amplitudes": [{{"index": [0, 0], "re": {h}, "im": 0.0}},
                                          {{"index": [1, 1], "re": {h}, "im": 0.0}}]}},
                "phi_b": {{"systems": [{{"label": "A2", "dim": 2}}, {{"label": "B2", "dim": 2}}],
                           "amplitudes": [{{"index": [0, 0], "re": {h}, "im": 0.0}},
                                          {{"index": [1, 1], "re": {h}, "im": 0.0}}]}},
                "phi_r": {{"systems": [{{"label": "R2", "dim": 2}}, {{"label": "B1", "dim": 2}}],
                           "amplitudes": [{{"index": [0, 0], "re": {h}, "im": 0.0}},
                                          {{"index": [1, 1], "re": {h}, "im": 0.0}}]}},
                "phi_c": {{"systems": [{{"label": "A3", "dim": 2}}, {{"label": "R3", "dim": 2}},
                                       {{"label": "B3", "dim": 2}}],
                           "amplitudes": [{{"index": [0, 0, 0], "re": {h}, "im": 0.0}},
                                          {{"index": [1, 1, 1], "re": {h}, "im": 0.0}}]}}
            }}"#
        );
        let spec = parse_decomposition_spec(&explicit).unwrap();
        assert!((bound_l_new(&spec).unwrap() - 2.0).abs() < 1e-9);

        assert!(matches!(
            parse_decomposition_spec("{}"),
            Err(Error::ParseError(_))
        ));
    }

    #[test]
    fn u_new_never_exceeds_u1_on_random_certified_states() {
        let mut rng = StdRng::seed_from_u64(41);
        for trial in 0..30 {
            let subset: Vec<usize> = match trial % 3 {
                0 => vec![0],
                1 => vec![1, 3],
                _ => vec![0, 1, 2],
            };
            let psi = testkit::random_common_subspace_state(&mut rng, 4, 4, &subset);
            let cert = CommonSubspaceCert::from_indices(4, subset).unwrap();
            let cert = verify_common(&psi, &cert).unwrap();
            assert!(cert.is_verified());
            let u_new = bound_u_new(&psi, Some(&cert)).unwrap();
            let u1 = bound_u1(&psi).unwrap();
            assert!(u_new <= u1 + 1e-9, "u_new {u_new} > u1 {u1}");
        }
    }
}
