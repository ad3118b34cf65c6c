//! Dense complex linear algebra over labeled subsystems.
//!
//! Everything in the crate is expressed against a [`SubsystemLayout`]: an
//! ordered list of `(label, dim)` pairs. The flat index convention is
//! row-major over the layout order, so a multi-index `(i₁, …, iₖ)` maps to
//!
//! ```text
//! i₁·d₂·d₃···dₖ + i₂·d₃···dₖ + … + iₖ
//! ```
//!
//! i.e. the first layout entry is the most significant digit. State files
//! depend on this convention bit-exactly.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::qstate::PureState;
use crate::tol;

/// An ordered list of labeled subsystems with their dimensions.
///
/// Labels are unique within a layout; ordering is significant and fixed
/// (it defines the tensor index order).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubsystemLayout {
    entries: Vec<(String, usize)>,
}

impl SubsystemLayout {
    pub fn new<S: Into<String>>(entries: Vec<(S, usize)>) -> Result<Self> {
        let entries: Vec<(String, usize)> =
            entries.into_iter().map(|(l, d)| (l.into(), d)).collect();
        for (label, dim) in &entries {
            if *dim < 1 {
                return Err(Error::DomainError(format!(
                    "subsystem {label} has dimension {dim}; must be >= 1"
                )));
            }
        }
        for (i, (label, _)) in entries.iter().enumerate() {
            if entries[i + 1..].iter().any(|(l, _)| l == label) {
                return Err(Error::LabelCollision(label.clone()));
            }
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[(String, usize)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(l, _)| l.as_str())
    }

    pub fn dims(&self) -> Vec<usize> {
        self.entries.iter().map(|&(_, d)| d).collect()
    }

    pub fn total_dim(&self) -> usize {
        self.entries.iter().map(|&(_, d)| d).product()
    }

    pub fn contains(&self, label: &str) -> bool {
        self.entries.iter().any(|(l, _)| l == label)
    }

    /// Position of `label` in the layout order.
    pub fn position(&self, label: &str) -> Result<usize> {
        self.entries
            .iter()
            .position(|(l, _)| l == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    pub fn dim_of(&self, label: &str) -> Result<usize> {
        self.position(label).map(|p| self.entries[p].1)
    }

    /// Concatenation; labels must be disjoint.
    pub fn concat(&self, other: &SubsystemLayout) -> Result<SubsystemLayout> {
        let mut entries = self.entries.clone();
        for (l, d) in &other.entries {
            if self.contains(l) {
                return Err(Error::LabelCollision(l.clone()));
            }
            entries.push((l.clone(), *d));
        }
        Ok(SubsystemLayout { entries })
    }

    /// Sub-layout of `labels`, kept in the original layout order.
    pub fn subset(&self, labels: &[&str]) -> Result<SubsystemLayout> {
        for l in labels {
            if !self.contains(l) {
                return Err(Error::UnknownLabel(l.to_string()));
            }
        }
        let entries = self
            .entries
            .iter()
            .filter(|(l, _)| labels.contains(&l.as_str()))
            .cloned()
            .collect();
        Ok(SubsystemLayout { entries })
    }

    /// Labels not in `labels`, in layout order.
    pub fn complement(&self, labels: &[&str]) -> Vec<String> {
        self.entries
            .iter()
            .filter(|(l, _)| !labels.contains(&l.as_str()))
            .map(|(l, _)| l.clone())
            .collect()
    }

    /// Row-major strides: `stride[k] = d_{k+1}·…·d_n`.
    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1usize; self.entries.len()];
        for k in (0..self.entries.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * self.entries[k + 1].1;
        }
        strides
    }

    pub fn flatten(&self, multi: &[usize]) -> usize {
        debug_assert_eq!(multi.len(), self.entries.len());
        let strides = self.strides();
        multi.iter().zip(&strides).map(|(i, s)| i * s).sum()
    }

    pub fn unflatten_into(&self, flat: usize, out: &mut [usize]) {
        debug_assert_eq!(out.len(), self.entries.len());
        let mut rem = flat;
        for (k, &(_, d)) in self.entries.iter().enumerate().rev() {
            out[k] = rem % d;
            rem /= d;
        }
    }

    pub fn unflatten(&self, flat: usize) -> Vec<usize> {
        let mut out = vec![0; self.entries.len()];
        self.unflatten_into(flat, &mut out);
        out
    }
}

/// Offset table for a subset of layout positions: `offsets[g]` is the flat
/// contribution of the g-th joint assignment of those positions. A full flat
/// index decomposes as `offsets_kept[g] + offsets_rest[h]` because flattening
/// is linear over disjoint position sets.
fn offsets_for(layout: &SubsystemLayout, positions: &[usize]) -> Vec<usize> {
    let strides = layout.strides();
    let dims: Vec<usize> = positions.iter().map(|&p| layout.entries[p].1).collect();
    let group: usize = dims.iter().product();
    let mut offsets = vec![0usize; group];
    for (g, slot) in offsets.iter_mut().enumerate() {
        let mut rem = g;
        let mut acc = 0usize;
        for (k, &p) in positions.iter().enumerate().rev() {
            let i = rem % dims[k];
            rem /= dims[k];
            acc += i * strides[p];
        }
        *slot = acc;
    }
    offsets
}

/// A square operator on the joint space of a layout.
#[derive(Clone, Debug)]
pub struct Operator {
    layout: SubsystemLayout,
    mat: DMatrix<C64>,
}

impl Operator {
    pub fn new(layout: SubsystemLayout, mat: DMatrix<C64>) -> Result<Self> {
        let d = layout.total_dim();
        if mat.nrows() != d || mat.ncols() != d {
            return Err(Error::LayoutMismatch(format!(
                "matrix is {}x{} but layout dimension is {d}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        Ok(Self { layout, mat })
    }

    pub fn identity(layout: SubsystemLayout) -> Self {
        let d = layout.total_dim();
        Self {
            layout,
            mat: DMatrix::identity(d, d),
        }
    }

    pub fn layout(&self) -> &SubsystemLayout {
        &self.layout
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.mat
    }

    pub fn dagger(&self) -> Operator {
        Operator {
            layout: self.layout.clone(),
            mat: self.mat.adjoint(),
        }
    }

    /// Kronecker product in layout order; label sets must be disjoint.
    pub fn tensor(&self, other: &Operator) -> Result<Operator> {
        let layout = self.layout.concat(&other.layout)?;
        let mat = self.mat.kronecker(&other.mat);
        Ok(Operator { layout, mat })
    }

    /// Max-abs residual of U·U† − 𝟙.
    pub fn unitarity_residual(&self) -> f64 {
        let d = self.mat.nrows();
        let prod = &self.mat * self.mat.adjoint();
        let mut res: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                let expect = if i == j {
                    C64::new(1.0, 0.0)
                } else {
                    C64::new(0.0, 0.0)
                };
                res = res.max((prod[(i, j)] - expect).norm());
            }
        }
        res
    }
}

/// A validated density operator: Hermitian within [`tol::HERMITIAN`]
/// (then symmetrized), trace 1 within [`tol::TRACE`]. Positivity is
/// enforced where eigenvalues are consumed.
#[derive(Clone, Debug)]
pub struct DensityOperator {
    layout: SubsystemLayout,
    mat: DMatrix<C64>,
}

impl DensityOperator {
    pub fn new(layout: SubsystemLayout, mat: DMatrix<C64>) -> Result<Self> {
        let d = layout.total_dim();
        if mat.nrows() != d || mat.ncols() != d {
            return Err(Error::LayoutMismatch(format!(
                "matrix is {}x{} but layout dimension is {d}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        let residual = hermiticity_residual(&mat);
        if residual > tol::HERMITIAN {
            return Err(Error::NotHermitian {
                residual,
                tol: tol::HERMITIAN,
            });
        }
        let mat = symmetrize(&mat);
        let trace: C64 = (0..d).map(|i| mat[(i, i)]).sum();
        if (trace.re - 1.0).abs() > tol::TRACE || trace.im.abs() > tol::TRACE {
            return Err(Error::NormalizationError(format!(
                "density trace is {} + {}i, expected 1",
                trace.re, trace.im
            )));
        }
        Ok(Self { layout, mat })
    }

    /// ρ = |ψ⟩⟨ψ| of a normalized pure state.
    pub fn from_pure(psi: &PureState) -> Result<Self> {
        psi.require_normalized()?;
        let amps = psi.amplitudes();
        let d = amps.len();
        let mut mat = DMatrix::zeros(d, d);
        for (i, a) in amps.iter().enumerate() {
            if *a == C64::new(0.0, 0.0) {
                continue;
            }
            for (j, b) in amps.iter().enumerate() {
                mat[(i, j)] = a * b.conj();
            }
        }
        Self::new(psi.layout().clone(), mat)
    }

    pub fn layout(&self) -> &SubsystemLayout {
        &self.layout
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.mat
    }

    /// Trace out everything except `keep`; the result layout is the kept
    /// labels in their original order. Preserves trace exactly up to
    /// floating-point summation.
    pub fn partial_trace(&self, keep: &[&str]) -> Result<DensityOperator> {
        if keep.is_empty() {
            return Err(Error::EmptyKeepSet);
        }
        for l in keep {
            if !self.layout.contains(l) {
                return Err(Error::UnknownLabel(l.to_string()));
            }
        }
        let kept_positions: Vec<usize> = (0..self.layout.len())
            .filter(|&p| keep.contains(&self.layout.entries[p].0.as_str()))
            .collect();
        let rest_positions: Vec<usize> = (0..self.layout.len())
            .filter(|p| !kept_positions.contains(p))
            .collect();
        let keep_offsets = offsets_for(&self.layout, &kept_positions);
        let rest_offsets = offsets_for(&self.layout, &rest_positions);
        let kd = keep_offsets.len();
        let mut out = DMatrix::zeros(kd, kd);
        for (r, &ro) in keep_offsets.iter().enumerate() {
            for (c, &co) in keep_offsets.iter().enumerate() {
                let mut acc = C64::new(0.0, 0.0);
                for &to in &rest_offsets {
                    acc += self.mat[(ro + to, co + to)];
                }
                out[(r, c)] = acc;
            }
        }
        let layout = self.layout.subset(keep)?;
        DensityOperator::new(layout, out)
    }

    /// Eigenvalues sorted descending. Exactly diagonal matrices short-circuit
    /// the eigensolver; otherwise a Hermitian eigendecomposition runs on the
    /// symmetrized matrix.
    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.mat)
    }
}

fn hermiticity_residual(mat: &DMatrix<C64>) -> f64 {
    let mut res: f64 = 0.0;
    for i in 0..mat.nrows() {
        for j in i..mat.ncols() {
            res = res.max((mat[(i, j)] - mat[(j, i)].conj()).norm());
        }
    }
    res
}

fn symmetrize(mat: &DMatrix<C64>) -> DMatrix<C64> {
    let adj = mat.adjoint();
    (mat + adj).map(|z| z * 0.5)
}

/// Eigenvalues of a Hermitian matrix, sorted descending. The input is
/// symmetrized first; matrices with exactly zero off-diagonals read the
/// diagonal directly. General matrices go through a cyclic Jacobi sweep,
/// which is unconditionally convergent on Hermitian input and robust to the
/// sparse zero patterns that reduced densities of structured states produce.
pub fn hermitian_eigenvalues(mat: &DMatrix<C64>) -> Vec<f64> {
    let mut a = symmetrize(mat);
    let n = a.nrows();
    let zero = C64::new(0.0, 0.0);
    let diagonal = (0..n).all(|i| (0..n).all(|j| i == j || a[(i, j)] == zero));
    if !diagonal {
        jacobi_diagonalize(&mut a);
    }
    let mut eigs: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
    eigs.sort_by(|x, y| y.partial_cmp(x).expect("eigenvalues are finite"));
    eigs
}

/// In-place cyclic Jacobi diagonalization of a Hermitian matrix. Each
/// rotation R†AR annihilates one off-diagonal pair; sweeps repeat until the
/// off-diagonal mass is below 1e-14 of the Frobenius norm.
fn jacobi_diagonalize(a: &mut DMatrix<C64>) {
    let n = a.nrows();
    let scale = a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if scale == 0.0 {
        return;
    }
    for _sweep in 0..60 {
        let off: f64 = (0..n)
            .flat_map(|p| ((p + 1)..n).map(move |q| (p, q)))
            .map(|(p, q)| 2.0 * a[(p, q)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= 1e-14 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let m = apq.norm();
                if m <= 1e-18 * scale {
                    continue;
                }
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let phase = apq / m;
                let tau = (aqq - app) / (2.0 * m);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    1.0 / (tau - (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // Columns p, q of A·R.
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * c - akq * phase.conj() * s;
                    a[(k, q)] = akp * phase * s + akq * c;
                }
                // Rows p, q of R†·(A·R).
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = apk * c - aqk * phase * s;
                    a[(q, k)] = apk * phase.conj() * s + aqk * c;
                }
                a[(p, q)] = C64::new(0.0, 0.0);
                a[(q, p)] = C64::new(0.0, 0.0);
                a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
                a[(q, q)] = C64::new(a[(q, q)].re, 0.0);
            }
        }
    }
}

/// Von Neumann entropy in bits: S(ρ) = −Σ λ log₂ λ over eigenvalues above
/// [`tol::EIG_CUTOFF`], clamped to ≥ 0. Eigenvalues below [`tol::EIG_FLOOR`]
/// are an error.
pub fn von_neumann_entropy(rho: &DensityOperator) -> Result<f64> {
    let eigs = rho.eigenvalues();
    if let Some(&bad) = eigs.iter().find(|&&l| l < tol::EIG_FLOOR) {
        return Err(Error::NotPositive { eigenvalue: bad });
    }
    let s: f64 = eigs
        .iter()
        .filter(|&&l| l > tol::EIG_CUTOFF)
        .map(|&l| -l * l.log2())
        .sum();
    Ok(s.max(0.0))
}

/// Anything that exposes reduced density operators over label subsets.
pub trait QState {
    fn layout(&self) -> &SubsystemLayout;
    fn reduced(&self, keep: &[&str]) -> Result<DensityOperator>;
}

impl QState for DensityOperator {
    fn layout(&self) -> &SubsystemLayout {
        &self.layout
    }

    fn reduced(&self, keep: &[&str]) -> Result<DensityOperator> {
        self.partial_trace(keep)
    }
}

impl QState for PureState {
    fn layout(&self) -> &SubsystemLayout {
        PureState::layout(self)
    }

    fn reduced(&self, keep: &[&str]) -> Result<DensityOperator> {
        reduced_density(self, keep)
    }
}

/// Reduced density operator of a normalized pure state over `keep`, without
/// materializing |ψ⟩⟨ψ|. Zero amplitudes are skipped, so sparse family
/// states reduce in time proportional to their support.
pub fn reduced_density(psi: &PureState, keep: &[&str]) -> Result<DensityOperator> {
    psi.require_normalized()?;
    if keep.is_empty() {
        return Err(Error::EmptyKeepSet);
    }
    let layout = psi.layout();
    for l in keep {
        if !layout.contains(l) {
            return Err(Error::UnknownLabel(l.to_string()));
        }
    }
    let kept_positions: Vec<usize> = (0..layout.len())
        .filter(|&p| keep.contains(&layout.entries()[p].0.as_str()))
        .collect();
    if kept_positions.len() == layout.len() {
        return DensityOperator::from_pure(psi);
    }
    let strides = layout.strides();
    let dims = layout.dims();
    let kept_layout = layout.subset(keep)?;
    let kept_strides = kept_layout.strides();
    let rest_positions: Vec<usize> = (0..layout.len())
        .filter(|p| !kept_positions.contains(p))
        .collect();
    let rest_strides = {
        // strides over the rest positions alone, row-major in layout order
        let mut s = vec![1usize; rest_positions.len()];
        for k in (0..rest_positions.len().saturating_sub(1)).rev() {
            s[k] = s[k + 1] * dims[rest_positions[k + 1]];
        }
        s
    };

    // (rest index, kept index, amplitude) for every nonzero amplitude,
    // sorted so accumulation order is deterministic.
    let mut nonzeros: Vec<(usize, usize, C64)> = Vec::new();
    for (flat, &a) in psi.amplitudes().iter().enumerate() {
        if a == C64::new(0.0, 0.0) {
            continue;
        }
        let mut kept_flat = 0usize;
        for (k, &p) in kept_positions.iter().enumerate() {
            kept_flat += ((flat / strides[p]) % dims[p]) * kept_strides[k];
        }
        let mut rest_flat = 0usize;
        for (k, &p) in rest_positions.iter().enumerate() {
            rest_flat += ((flat / strides[p]) % dims[p]) * rest_strides[k];
        }
        nonzeros.push((rest_flat, kept_flat, a));
    }
    nonzeros.sort_by_key(|&(r, k, _)| (r, k));

    let kd = kept_layout.total_dim();
    let mut mat = DMatrix::zeros(kd, kd);
    let mut start = 0usize;
    while start < nonzeros.len() {
        let rest = nonzeros[start].0;
        let mut end = start;
        while end < nonzeros.len() && nonzeros[end].0 == rest {
            end += 1;
        }
        for &(_, i, a) in &nonzeros[start..end] {
            for &(_, j, b) in &nonzeros[start..end] {
                mat[(i, j)] += a * b.conj();
            }
        }
        start = end;
    }
    DensityOperator::new(kept_layout, mat)
}

/// S(reduced over `labels`) of a pure state, in bits.
pub fn entropy_of(psi: &PureState, labels: &[&str]) -> Result<f64> {
    von_neumann_entropy(&reduced_density(psi, labels)?)
}

/// Conditional entropy S(target | condition) = S(target ∪ condition) −
/// S(condition). An empty condition gives the plain entropy of `target`.
pub fn conditional_entropy<S: QState>(
    state: &S,
    target: &[&str],
    condition: &[&str],
) -> Result<f64> {
    if target.is_empty() {
        return Err(Error::EmptyKeepSet);
    }
    for t in target {
        if condition.contains(t) {
            return Err(Error::LabelCollision(t.to_string()));
        }
    }
    for l in target.iter().chain(condition.iter()) {
        if !state.layout().contains(l) {
            return Err(Error::UnknownLabel(l.to_string()));
        }
    }
    let joint: Vec<&str> = target.iter().chain(condition.iter()).copied().collect();
    let s_joint = von_neumann_entropy(&state.reduced(&joint)?)?;
    if condition.is_empty() {
        return Ok(s_joint);
    }
    let s_cond = von_neumann_entropy(&state.reduced(condition)?)?;
    Ok(s_joint - s_cond)
}

/// Schmidt decomposition of a normalized pure state across `cut | rest`.
#[derive(Clone, Debug)]
pub struct Schmidt {
    /// Non-negative coefficients √λᵢ, descending; Σ λᵢ = 1.
    pub coefficients: Vec<f64>,
    pub left: Vec<DVector<C64>>,
    pub right: Vec<DVector<C64>>,
    pub cut_layout: SubsystemLayout,
    pub rest_layout: SubsystemLayout,
}

impl Schmidt {
    /// Number of coefficients above `1e-10`.
    pub fn rank(&self) -> usize {
        self.coefficients.iter().filter(|&&c| c > 1e-10).count()
    }

    /// Reassemble Σᵢ √λᵢ |αᵢ⟩|βᵢ⟩ on the layout `cut ++ rest`.
    pub fn reconstruct(&self) -> Result<PureState> {
        let layout = self.cut_layout.concat(&self.rest_layout)?;
        let (dl, dr) = (self.cut_layout.total_dim(), self.rest_layout.total_dim());
        let mut amps = vec![C64::new(0.0, 0.0); dl * dr];
        for ((c, l), r) in self.coefficients.iter().zip(&self.left).zip(&self.right) {
            for i in 0..dl {
                for j in 0..dr {
                    amps[i * dr + j] += C64::new(*c, 0.0) * l[i] * r[j];
                }
            }
        }
        PureState::new(layout, amps)
    }
}

/// Schmidt decomposition across the bipartition `cut` vs the remaining
/// labels, via SVD of the reshaped amplitude matrix.
pub fn schmidt_decomposition(psi: &PureState, cut: &[&str]) -> Result<Schmidt> {
    psi.require_normalized()?;
    let layout = psi.layout();
    for l in cut {
        if !layout.contains(l) {
            return Err(Error::UnknownLabel(l.to_string()));
        }
    }
    let cut_positions: Vec<usize> = (0..layout.len())
        .filter(|&p| cut.contains(&layout.entries()[p].0.as_str()))
        .collect();
    if cut_positions.is_empty() || cut_positions.len() == layout.len() {
        return Err(Error::EmptyCut);
    }
    let cut_labels: Vec<&str> = cut_positions
        .iter()
        .map(|&p| layout.entries()[p].0.as_str())
        .collect();
    let rest_labels = layout.complement(&cut_labels);
    let rest_refs: Vec<&str> = rest_labels.iter().map(|s| s.as_str()).collect();
    let cut_layout = layout.subset(&cut_labels)?;
    let rest_layout = layout.subset(&rest_refs)?;

    let cut_offsets = offsets_for(layout, &cut_positions);
    let rest_positions: Vec<usize> = (0..layout.len())
        .filter(|p| !cut_positions.contains(p))
        .collect();
    let rest_offsets = offsets_for(layout, &rest_positions);
    let (dl, dr) = (cut_offsets.len(), rest_offsets.len());
    let mut m = DMatrix::zeros(dl, dr);
    let amps = psi.amplitudes();
    for (i, &co) in cut_offsets.iter().enumerate() {
        for (j, &ro) in rest_offsets.iter().enumerate() {
            m[(i, j)] = amps[co + ro];
        }
    }

    let svd = m.svd(true, true);
    let u = svd.u.expect("svd requested u");
    let v_t = svd.v_t.expect("svd requested v_t");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| {
        svd.singular_values[b]
            .partial_cmp(&svd.singular_values[a])
            .expect("singular values are finite")
    });
    let mut coefficients = Vec::with_capacity(order.len());
    let mut left = Vec::with_capacity(order.len());
    let mut right = Vec::with_capacity(order.len());
    for &k in &order {
        coefficients.push(svd.singular_values[k]);
        left.push(DVector::from_iterator(dl, u.column(k).iter().copied()));
        right.push(DVector::from_iterator(dr, v_t.row(k).iter().copied()));
    }
    Ok(Schmidt {
        coefficients,
        left,
        right,
        cut_layout,
        rest_layout,
    })
}

/// ½‖a − b‖₁ via the eigenvalues of the Hermitian difference.
pub fn trace_distance(a: &DensityOperator, b: &DensityOperator) -> Result<f64> {
    if a.layout != b.layout {
        return Err(Error::LayoutMismatch(format!(
            "[{}] vs [{}]",
            a.layout.labels().collect::<Vec<_>>().join(","),
            b.layout.labels().collect::<Vec<_>>().join(","),
        )));
    }
    let diff = &a.mat - &b.mat;
    let eigs = hermitian_eigenvalues(&diff);
    Ok(0.5 * eigs.iter().map(|l| l.abs()).sum::<f64>())
}

/// Apply a unitary acting on the joint space of `labels` (in the given
/// order) to a pure state. The matrix is indexed row-major over that order.
pub fn apply_local_unitary(
    psi: &PureState,
    labels: &[&str],
    u: &DMatrix<C64>,
) -> Result<PureState> {
    apply_local_matrix(psi, labels, u)
}

/// Apply an arbitrary square matrix on the joint space of `labels`. The
/// result keeps the input's fragment flag, so non-norm-preserving maps
/// (projectors) should be applied to fragments or re-wrapped by the caller.
pub fn apply_local_matrix(psi: &PureState, labels: &[&str], u: &DMatrix<C64>) -> Result<PureState> {
    let layout = psi.layout();
    let positions: Vec<usize> = labels
        .iter()
        .map(|l| layout.position(l))
        .collect::<Result<_>>()?;
    let sub_dim: usize = positions.iter().map(|&p| layout.entries()[p].1).product();
    if u.nrows() != sub_dim || u.ncols() != sub_dim {
        return Err(Error::DimMismatch(format!(
            "unitary is {}x{} but target subsystems span dimension {sub_dim}",
            u.nrows(),
            u.ncols()
        )));
    }
    // Offsets must follow the caller's label order, not the layout order.
    let strides = layout.strides();
    let sub_dims: Vec<usize> = positions.iter().map(|&p| layout.entries()[p].1).collect();
    let sub_strides = sub_layout_strides(&sub_dims);
    let mut sub_offsets = vec![0usize; sub_dim];
    for (g, slot) in sub_offsets.iter_mut().enumerate() {
        let mut acc = 0usize;
        for (k, &p) in positions.iter().enumerate() {
            acc += ((g / sub_strides[k]) % sub_dims[k]) * strides[p];
        }
        *slot = acc;
    }
    let rest_positions: Vec<usize> = (0..layout.len())
        .filter(|p| !positions.contains(p))
        .collect();
    let rest_offsets = offsets_for(layout, &rest_positions);

    let amps = psi.amplitudes();
    let mut out = vec![C64::new(0.0, 0.0); amps.len()];
    let mut x = vec![C64::new(0.0, 0.0); sub_dim];
    for &ro in &rest_offsets {
        for (g, &so) in sub_offsets.iter().enumerate() {
            x[g] = amps[ro + so];
        }
        for (i, &so) in sub_offsets.iter().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for (j, &xv) in x.iter().enumerate() {
                if xv != C64::new(0.0, 0.0) {
                    acc += u[(i, j)] * xv;
                }
            }
            out[ro + so] = acc;
        }
    }
    PureState::preserving_norm(psi, out)
}

fn sub_layout_strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1usize; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * dims[k + 1];
    }
    s
}

/// Relabel amplitudes along a basis permutation of a single subsystem:
/// |i⟩ ↦ |perm[i]⟩ on `label`. Exact (amplitudes move, never recombine).
pub fn apply_basis_permutation(psi: &PureState, label: &str, perm: &[usize]) -> Result<PureState> {
    let layout = psi.layout();
    let pos = layout.position(label)?;
    let d = layout.entries()[pos].1;
    if perm.len() != d {
        return Err(Error::DimMismatch(format!(
            "permutation has length {} but {label} has dimension {d}",
            perm.len()
        )));
    }
    let mut seen = vec![false; d];
    for &p in perm {
        if p >= d || seen[p] {
            return Err(Error::DomainError("not a permutation".into()));
        }
        seen[p] = true;
    }
    permute_basis(psi, |multi, out| {
        out.copy_from_slice(multi);
        out[pos] = perm[multi[pos]];
    })
}

/// Fix the components of some labels to given basis indices and drop those
/// labels, returning the state on the remaining layout together with the
/// norm of everything outside the slice. For a non-fragment input the slice
/// must itself be normalized.
pub fn factor_basis_slice(psi: &PureState, fixed: &[(&str, usize)]) -> Result<(PureState, f64)> {
    let layout = psi.layout();
    let mut fixed_positions = Vec::with_capacity(fixed.len());
    for (label, index) in fixed {
        let p = layout.position(label)?;
        let d = layout.entries()[p].1;
        if *index >= d {
            return Err(Error::DomainError(format!(
                "index {index} out of range for {label} (dim {d})"
            )));
        }
        fixed_positions.push((p, *index));
    }
    let fixed_labels: Vec<&str> = fixed.iter().map(|(l, _)| *l).collect();
    let remaining = layout.complement(&fixed_labels);
    if remaining.is_empty() {
        return Err(Error::EmptyKeepSet);
    }
    let remaining_refs: Vec<&str> = remaining.iter().map(|s| s.as_str()).collect();
    let new_layout = layout.subset(&remaining_refs)?;
    let mut amps = vec![C64::new(0.0, 0.0); new_layout.total_dim()];
    let mut off_norm_sq = 0.0f64;
    let mut multi = vec![0usize; layout.len()];
    let remaining_positions: Vec<usize> = (0..layout.len())
        .filter(|p| !fixed_positions.iter().any(|&(fp, _)| fp == *p))
        .collect();
    let new_strides = new_layout.strides();
    for (flat, &a) in psi.amplitudes().iter().enumerate() {
        if a == C64::new(0.0, 0.0) {
            continue;
        }
        layout.unflatten_into(flat, &mut multi);
        if fixed_positions.iter().all(|&(p, i)| multi[p] == i) {
            let mut new_flat = 0usize;
            for (k, &p) in remaining_positions.iter().enumerate() {
                new_flat += multi[p] * new_strides[k];
            }
            amps[new_flat] = a;
        } else {
            off_norm_sq += a.norm_sqr();
        }
    }
    let state = if psi.is_fragment() {
        PureState::fragment(new_layout, amps)?
    } else {
        PureState::new(new_layout, amps)?
    };
    Ok((state, off_norm_sq.sqrt()))
}

/// Rebuild a state by a bijective relabeling of basis multi-indices:
/// `amp_out[f(idx)] = amp_in[idx]`. Exact; preserves the fragment flag.
pub fn permute_basis<F>(psi: &PureState, f: F) -> Result<PureState>
where
    F: Fn(&[usize], &mut [usize]),
{
    let layout = psi.layout();
    let n = layout.len();
    let amps = psi.amplitudes();
    let mut out = vec![C64::new(0.0, 0.0); amps.len()];
    let mut multi = vec![0usize; n];
    let mut image = vec![0usize; n];
    for (flat, &a) in amps.iter().enumerate() {
        if a == C64::new(0.0, 0.0) {
            continue;
        }
        layout.unflatten_into(flat, &mut multi);
        f(&multi, &mut image);
        out[layout.flatten(&image)] = a;
    }
    PureState::preserving_norm(psi, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::{epr_pair, make_named, NamedState, PureState};
    use crate::testkit;
    use proptest::prelude::*;
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn layout_rejects_duplicates_and_zero_dims() {
        assert!(matches!(
            SubsystemLayout::new(vec![("A", 2), ("A", 3)]),
            Err(Error::LabelCollision(_))
        ));
        assert!(matches!(
            SubsystemLayout::new(vec![("A", 0)]),
            Err(Error::DomainError(_))
        ));
    }

    #[test]
    fn flatten_is_row_major_over_layout_order() {
        let layout = SubsystemLayout::new(vec![("A", 2), ("B", 3), ("C", 4)]).unwrap();
        assert_eq!(layout.strides(), vec![12, 4, 1]);
        assert_eq!(layout.flatten(&[1, 2, 3]), 12 + 8 + 3);
        assert_eq!(layout.unflatten(23), vec![1, 2, 3]);
    }

    #[test]
    fn tensor_of_identities_is_identity() {
        let a = Operator::identity(SubsystemLayout::new(vec![("A", 2)]).unwrap());
        let b = Operator::identity(SubsystemLayout::new(vec![("B", 3)]).unwrap());
        let t = a.tensor(&b).unwrap();
        assert_eq!(t.layout().total_dim(), 6);
        assert_eq!(t.matrix(), &DMatrix::<C64>::identity(6, 6));
    }

    #[test]
    fn tensor_rejects_duplicate_labels() {
        let a = Operator::identity(SubsystemLayout::new(vec![("A", 2)]).unwrap());
        assert!(matches!(a.tensor(&a), Err(Error::LabelCollision(_))));
    }

    #[test]
    fn tensor_of_basis_states_places_single_amplitude() {
        let zero = PureState::basis_state(SubsystemLayout::new(vec![("A", 2)]).unwrap(), &[0]);
        let one = PureState::basis_state(SubsystemLayout::new(vec![("B", 2)]).unwrap(), &[1]);
        let prod = zero.tensor(&one).unwrap();
        assert_eq!(prod.amp(&[0, 1]), c(1.0, 0.0));
        assert_eq!(
            prod.amplitudes()
                .iter()
                .filter(|a| **a != c(0.0, 0.0))
                .count(),
            1
        );
    }

    #[test]
    fn tensor_of_epr_pairs_is_pure() {
        let ab = epr_pair("A", "B").unwrap();
        let cd = epr_pair("C", "D").unwrap();
        let rho = DensityOperator::from_pure(&ab.tensor(&cd).unwrap()).unwrap();
        let eigs = rho.eigenvalues();
        assert!((eigs[0] - 1.0).abs() < 1e-12);
        assert_eq!(eigs.iter().filter(|&&l| l > 1e-10).count(), 1);
    }

    #[test]
    fn partial_trace_of_epr_is_maximally_mixed() {
        let epr = epr_pair("A", "B").unwrap();
        let rho = DensityOperator::from_pure(&epr).unwrap();
        let ra = rho.partial_trace(&["A"]).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let expect = if i == j { 0.5 } else { 0.0 };
                assert!((ra.matrix()[(i, j)] - c(expect, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn partial_trace_of_ghz_over_r_is_diagonal_half_half() {
        // Direct 8x8 computation fixes the expected AB marginal of the GHZ
        // state: diag(1/2, 0, 0, 1/2) in the basis {00, 01, 10, 11}.
        let ghz = make_named(NamedState::Ghz3).unwrap();
        let rho = DensityOperator::from_pure(&ghz).unwrap();
        let ab = rho.partial_trace(&["A", "B"]).unwrap();
        let expect = [0.5, 0.0, 0.0, 0.5];
        for (i, &diag) in expect.iter().enumerate() {
            for j in 0..4 {
                let want = if i == j { diag } else { 0.0 };
                assert!((ab.matrix()[(i, j)] - c(want, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn chained_traces_equal_single_trace() {
        let mut rng = StdRng::seed_from_u64(7);
        let layout = SubsystemLayout::new(vec![("A", 2), ("B", 3), ("C", 2)]).unwrap();
        let psi = testkit::random_pure_state(&mut rng, layout);
        let rho = DensityOperator::from_pure(&psi).unwrap();
        let single = rho.partial_trace(&["C"]).unwrap();
        let chained = rho
            .partial_trace(&["B", "C"])
            .unwrap()
            .partial_trace(&["C"])
            .unwrap();
        assert!(trace_distance(&single, &chained).unwrap() < 1e-12);
    }

    #[test]
    fn partial_trace_errors() {
        let rho = DensityOperator::from_pure(&epr_pair("A", "B").unwrap()).unwrap();
        assert!(matches!(rho.partial_trace(&[]), Err(Error::EmptyKeepSet)));
        assert!(matches!(
            rho.partial_trace(&["Q"]),
            Err(Error::UnknownLabel(_))
        ));
    }

    #[test]
    fn entropy_of_pure_density_is_zero() {
        let rho = DensityOperator::from_pure(&epr_pair("A", "B").unwrap()).unwrap();
        assert!(von_neumann_entropy(&rho).unwrap().abs() < 1e-12);
    }

    #[test]
    fn entropy_of_maximally_mixed_is_log_d() {
        for d in [2usize, 3, 5, 6] {
            let layout = SubsystemLayout::new(vec![("A", d)]).unwrap();
            let mat = DMatrix::from_diagonal_element(d, d, c(1.0 / d as f64, 0.0));
            let rho = DensityOperator::new(layout, mat).unwrap();
            let s = von_neumann_entropy(&rho).unwrap();
            assert!((s - (d as f64).log2()).abs() < 1e-12);
        }
    }

    #[test]
    fn entropy_of_ghz_marginal_is_one_bit() {
        let ghz = make_named(NamedState::Ghz3).unwrap();
        let s = entropy_of(&ghz, &["A", "B"]).unwrap();
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn non_hermitian_is_rejected() {
        let layout = SubsystemLayout::new(vec![("A", 2)]).unwrap();
        let mut mat = DMatrix::from_diagonal_element(2, 2, c(0.5, 0.0));
        mat[(0, 1)] = c(0.3, 0.0);
        assert!(matches!(
            DensityOperator::new(layout, mat),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn negative_eigenvalue_is_rejected_by_entropy() {
        let layout = SubsystemLayout::new(vec![("A", 2)]).unwrap();
        let mat = DMatrix::from_diagonal(&DVector::from_vec(vec![c(1.5, 0.0), c(-0.5, 0.0)]));
        let rho = DensityOperator::new(layout, mat).unwrap();
        assert!(matches!(
            von_neumann_entropy(&rho),
            Err(Error::NotPositive { .. })
        ));
    }

    #[test]
    fn conditional_entropy_of_epr_is_minus_one() {
        let epr = epr_pair("A", "B").unwrap();
        let s = conditional_entropy(&epr, &["A"], &["B"]).unwrap();
        assert!((s + 1.0).abs() < 1e-12);
    }

    #[test]
    fn conditional_entropy_of_product_is_zero() {
        let zero_a = PureState::basis_state(SubsystemLayout::new(vec![("A", 2)]).unwrap(), &[0]);
        let zero_b = PureState::basis_state(SubsystemLayout::new(vec![("B", 2)]).unwrap(), &[0]);
        let prod = zero_a.tensor(&zero_b).unwrap();
        let s = conditional_entropy(&prod, &["A"], &["B"]).unwrap();
        assert!(s.abs() < 1e-12);
    }

    #[test]
    fn conditional_entropy_rejects_overlap() {
        let epr = epr_pair("A", "B").unwrap();
        assert!(matches!(
            conditional_entropy(&epr, &["A"], &["A"]),
            Err(Error::LabelCollision(_))
        ));
    }

    #[test]
    fn schmidt_of_epr_is_balanced_rank_two() {
        let epr = epr_pair("A", "B").unwrap();
        let schmidt = schmidt_decomposition(&epr, &["A"]).unwrap();
        assert_eq!(schmidt.rank(), 2);
        let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
        assert!((schmidt.coefficients[0] - inv_sqrt2).abs() < 1e-12);
        assert!((schmidt.coefficients[1] - inv_sqrt2).abs() < 1e-12);
    }

    #[test]
    fn schmidt_of_product_is_rank_one() {
        let zero_a = PureState::basis_state(SubsystemLayout::new(vec![("A", 2)]).unwrap(), &[1]);
        let zero_b = PureState::basis_state(SubsystemLayout::new(vec![("B", 3)]).unwrap(), &[2]);
        let prod = zero_a.tensor(&zero_b).unwrap();
        let schmidt = schmidt_decomposition(&prod, &["A"]).unwrap();
        assert_eq!(schmidt.rank(), 1);
        assert!((schmidt.coefficients[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn schmidt_rejects_trivial_cut() {
        let epr = epr_pair("A", "B").unwrap();
        assert!(matches!(
            schmidt_decomposition(&epr, &["A", "B"]),
            Err(Error::EmptyCut)
        ));
        assert!(matches!(
            schmidt_decomposition(&epr, &[]),
            Err(Error::EmptyCut)
        ));
    }

    #[test]
    fn trace_distance_basics() {
        let p0 = DensityOperator::from_pure(&PureState::basis_state(
            SubsystemLayout::new(vec![("A", 2)]).unwrap(),
            &[0],
        ))
        .unwrap();
        let p1 = DensityOperator::from_pure(&PureState::basis_state(
            SubsystemLayout::new(vec![("A", 2)]).unwrap(),
            &[1],
        ))
        .unwrap();
        assert!(trace_distance(&p0, &p0).unwrap() < 1e-15);
        assert!((trace_distance(&p0, &p1).unwrap() - 1.0).abs() < 1e-12);
        let mixed = DensityOperator::new(
            SubsystemLayout::new(vec![("A", 2)]).unwrap(),
            DMatrix::from_diagonal_element(2, 2, c(0.5, 0.0)),
        )
        .unwrap();
        assert!((trace_distance(&p0, &mixed).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn trace_distance_rejects_layout_mismatch() {
        let pa = DensityOperator::from_pure(&PureState::basis_state(
            SubsystemLayout::new(vec![("A", 2)]).unwrap(),
            &[0],
        ))
        .unwrap();
        let pb = DensityOperator::from_pure(&PureState::basis_state(
            SubsystemLayout::new(vec![("B", 2)]).unwrap(),
            &[0],
        ))
        .unwrap();
        assert!(matches!(
            trace_distance(&pa, &pb),
            Err(Error::LayoutMismatch(_))
        ));
    }

    #[test]
    fn eigenvalues_of_sparse_embedded_blocks() {
        // Zero matrix with a known 2x2 Hermitian block scattered at rows
        // {1, 5} and a lone diagonal entry at 3. Exact zero rows and
        // columns elsewhere; the spectrum is {3, -1, 0.7, 0, ...}.
        let n = 8;
        let mut m = DMatrix::<C64>::zeros(n, n);
        m[(1, 1)] = c(1.0, 0.0);
        m[(5, 5)] = c(1.0, 0.0);
        m[(1, 5)] = c(0.0, 2.0);
        m[(5, 1)] = c(0.0, -2.0);
        m[(3, 3)] = c(0.7, 0.0);
        let eigs = hermitian_eigenvalues(&m);
        assert!((eigs[0] - 3.0).abs() < 1e-12);
        assert!((eigs[1] - 0.7).abs() < 1e-12);
        assert!((eigs[n - 1] + 1.0).abs() < 1e-12);
        let zero_count = eigs.iter().filter(|l| l.abs() < 1e-12).count();
        assert_eq!(zero_count, 5);
    }

    #[test]
    fn eigenvalues_match_trace_moments_of_random_hermitian_matrices() {
        // Newton-moment oracle: sum of eigenvalue powers equals tr(A^k),
        // independent of any eigensolver.
        let mut rng = StdRng::seed_from_u64(61);
        for trial in 0..20 {
            let n = 2 + trial % 7;
            let g = DMatrix::from_fn(n, n, |_, _| {
                c(
                    rand::Rng::gen::<f64>(&mut rng) - 0.5,
                    rand::Rng::gen::<f64>(&mut rng) - 0.5,
                )
            });
            let herm = (&g + g.adjoint()).map(|z| z * 0.5);
            let eigs = hermitian_eigenvalues(&herm);
            let sq = &herm * &herm;
            let cu = &sq * &herm;
            for (k, mat) in [(1, &herm), (2, &sq), (3, &cu)] {
                let trace: f64 = (0..n).map(|i| mat[(i, i)].re).sum();
                let moment: f64 = eigs.iter().map(|l| l.powi(k)).sum();
                assert!(
                    (trace - moment).abs() < 1e-10,
                    "n={n} k={k}: trace {trace} vs moment {moment}"
                );
            }
        }
    }

    #[test]
    fn complementary_entropies_of_random_tripartite_states_agree() {
        let mut rng = StdRng::seed_from_u64(11);
        for _ in 0..25 {
            let layout = SubsystemLayout::new(vec![("A", 3), ("B", 2), ("R", 4)]).unwrap();
            let psi = testkit::random_pure_state(&mut rng, layout);
            let s_ab = entropy_of(&psi, &["A", "B"]).unwrap();
            let s_r = entropy_of(&psi, &["R"]).unwrap();
            assert!((s_ab - s_r).abs() < 1e-9, "S(AB)={s_ab} S(R)={s_r}");
            let s_ar = entropy_of(&psi, &["A", "R"]).unwrap();
            let s_b = entropy_of(&psi, &["B"]).unwrap();
            assert!((s_ar - s_b).abs() < 1e-9);
        }
    }

    #[test]
    fn entropy_invariant_under_unitary_on_traced_out_system() {
        let mut rng = StdRng::seed_from_u64(13);
        for _ in 0..10 {
            let layout = SubsystemLayout::new(vec![("A", 2), ("B", 3)]).unwrap();
            let psi = testkit::random_pure_state(&mut rng, layout);
            let u = testkit::random_unitary(&mut rng, 3);
            let rotated = apply_local_unitary(&psi, &["B"], &u).unwrap();
            let before = entropy_of(&psi, &["A"]).unwrap();
            let after = entropy_of(&rotated, &["A"]).unwrap();
            assert!((before - after).abs() < 1e-9);
        }
    }

    #[test]
    fn partial_trace_preserves_trace_and_positivity() {
        let mut rng = StdRng::seed_from_u64(17);
        for _ in 0..20 {
            let layout = SubsystemLayout::new(vec![("A", 2), ("B", 2), ("R", 3)]).unwrap();
            let psi = testkit::random_pure_state(&mut rng, layout);
            let rho = DensityOperator::from_pure(&psi).unwrap();
            let red = rho.partial_trace(&["A", "R"]).unwrap();
            let trace: C64 = (0..red.matrix().nrows())
                .map(|i| red.matrix()[(i, i)])
                .sum();
            assert!((trace.re - 1.0).abs() < 1e-12);
            let min_eig = red.eigenvalues().into_iter().fold(f64::INFINITY, f64::min);
            assert!(min_eig >= -1e-10);
        }
    }

    #[test]
    fn schmidt_reconstruction_on_random_states() {
        let mut rng = StdRng::seed_from_u64(19);
        for trial in 0..100 {
            let da = 2 + (trial % 5);
            let db = 2 + (trial % 4);
            let layout = SubsystemLayout::new(vec![("A", da), ("B", db)]).unwrap();
            let psi = testkit::random_pure_state(&mut rng, layout);
            let schmidt = schmidt_decomposition(&psi, &["A"]).unwrap();
            let sum_sq: f64 = schmidt.coefficients.iter().map(|c| c * c).sum();
            assert!((sum_sq - 1.0).abs() < 1e-9);
            let rebuilt = schmidt.reconstruct().unwrap();
            let diff: f64 = rebuilt
                .amplitudes()
                .iter()
                .zip(psi.amplitudes())
                .map(|(a, b)| (a - b).norm_sqr())
                .sum::<f64>()
                .sqrt();
            assert!(diff < 1e-9, "reconstruction residual {diff}");
        }
    }

    proptest! {
        #[test]
        fn trace_distance_triangle_inequality(seed in 0u64..500) {
            let mut rng = StdRng::seed_from_u64(seed);
            let layout = SubsystemLayout::new(vec![("A", 2), ("B", 2)]).unwrap();
            let mk = |rng: &mut StdRng| {
                DensityOperator::from_pure(
                    &testkit::random_pure_state(rng, layout.clone()),
                ).unwrap()
            };
            let (a, b, m) = (mk(&mut rng), mk(&mut rng), mk(&mut rng));
            let ab = trace_distance(&a, &b).unwrap();
            let am = trace_distance(&a, &m).unwrap();
            let mb = trace_distance(&m, &b).unwrap();
            prop_assert!(ab <= am + mb + 1e-9);
            prop_assert!((0.0..=1.0 + 1e-9).contains(&ab));
        }

        #[test]
        fn unflatten_flatten_roundtrip(flat in 0usize..36) {
            let layout = SubsystemLayout::new(vec![("A", 3), ("B", 4), ("C", 3)]).unwrap();
            prop_assert!(flat < layout.total_dim());
            let multi = layout.unflatten(flat);
            prop_assert_eq!(layout.flatten(&multi), flat);
        }
    }
}
