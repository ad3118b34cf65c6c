//! Pure-state model, named state families, and state-file serialization.
//!
//! States are complex amplitude vectors over a [`SubsystemLayout`]. Two
//! constructors exist: [`PureState::new`] enforces unit norm, while
//! [`PureState::fragment`] admits sub-normalized vectors — the pieces a
//! common/uncommon decomposition produces are fragments, never silently
//! renormalized, because the decomposition sums them back.

use std::path::Path;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qlinalg::{permute_basis, SubsystemLayout};
use crate::tol;

const ZERO: C64 = C64::new(0.0, 0.0);

/// A labeled pure state (or sub-normalized fragment).
#[derive(Clone, Debug)]
pub struct PureState {
    layout: SubsystemLayout,
    amps: Vec<C64>,
    fragment: bool,
}

impl PureState {
    /// A normalized state; the amplitude norm must be 1 within [`tol::NORM`].
    pub fn new(layout: SubsystemLayout, amps: Vec<C64>) -> Result<Self> {
        Self::check_len(&layout, &amps)?;
        let norm = vec_norm(&amps);
        if (norm - 1.0).abs() > tol::NORM {
            return Err(Error::NormalizationError(format!(
                "state norm is {norm}, expected 1"
            )));
        }
        Ok(Self {
            layout,
            amps,
            fragment: false,
        })
    }

    /// A sub-normalized fragment (‖ψ‖ ≤ 1). Fragments arise as projections
    /// of normalized states.
    pub fn fragment(layout: SubsystemLayout, amps: Vec<C64>) -> Result<Self> {
        Self::check_len(&layout, &amps)?;
        let norm = vec_norm(&amps);
        if norm > 1.0 + tol::NORM {
            return Err(Error::NormalizationError(format!(
                "fragment norm is {norm}, exceeds 1"
            )));
        }
        Ok(Self {
            layout,
            amps,
            fragment: true,
        })
    }

    /// Rebuild with new amplitudes, keeping the layout and fragment flag of
    /// `like`. For norm-preserving maps (unitaries, basis permutations).
    pub(crate) fn preserving_norm(like: &PureState, amps: Vec<C64>) -> Result<Self> {
        Self::check_len(&like.layout, &amps)?;
        Ok(Self {
            layout: like.layout.clone(),
            amps,
            fragment: like.fragment,
        })
    }

    fn check_len(layout: &SubsystemLayout, amps: &[C64]) -> Result<()> {
        if amps.len() != layout.total_dim() {
            return Err(Error::LayoutMismatch(format!(
                "{} amplitudes for layout dimension {}",
                amps.len(),
                layout.total_dim()
            )));
        }
        Ok(())
    }

    /// The computational basis state |multi⟩.
    pub fn basis_state(layout: SubsystemLayout, multi: &[usize]) -> Self {
        let mut amps = vec![ZERO; layout.total_dim()];
        let flat = layout.flatten(multi);
        amps[flat] = C64::new(1.0, 0.0);
        Self {
            layout,
            amps,
            fragment: false,
        }
    }

    /// A normalized state from `(multi-index, amplitude)` pairs; omitted
    /// indices are zero.
    pub fn from_indexed(layout: SubsystemLayout, entries: &[(&[usize], C64)]) -> Result<Self> {
        let mut amps = vec![ZERO; layout.total_dim()];
        for (multi, a) in entries {
            amps[layout.flatten(multi)] = *a;
        }
        Self::new(layout, amps)
    }

    pub fn layout(&self) -> &SubsystemLayout {
        &self.layout
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn is_fragment(&self) -> bool {
        self.fragment
    }

    pub fn norm(&self) -> f64 {
        vec_norm(&self.amps)
    }

    pub(crate) fn require_normalized(&self) -> Result<()> {
        let norm = self.norm();
        if (norm - 1.0).abs() > tol::NORM {
            return Err(Error::NormalizationError(format!(
                "operation requires a normalized state; norm is {norm}"
            )));
        }
        Ok(())
    }

    pub fn amp(&self, multi: &[usize]) -> C64 {
        self.amps[self.layout.flatten(multi)]
    }

    /// Tensor product in layout order; labels must be disjoint.
    pub fn tensor(&self, other: &PureState) -> Result<PureState> {
        let layout = self.layout.concat(&other.layout)?;
        let mut amps = vec![ZERO; layout.total_dim()];
        let len_b = other.amps.len();
        for (i, a) in self.amps.iter().enumerate() {
            if *a == ZERO {
                continue;
            }
            for (j, b) in other.amps.iter().enumerate() {
                amps[i * len_b + j] = a * b;
            }
        }
        Ok(PureState {
            layout,
            amps,
            fragment: self.fragment || other.fragment,
        })
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &PureState) -> Result<C64> {
        if self.layout != other.layout {
            return Err(Error::LayoutMismatch("inner product".into()));
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// ‖self − other‖₂.
    pub fn vector_distance(&self, other: &PureState) -> Result<f64> {
        if self.layout != other.layout {
            return Err(Error::LayoutMismatch("vector distance".into()));
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt())
    }
}

fn vec_norm(amps: &[C64]) -> f64 {
    amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

/// Coefficients (c₀, c₁, c₂, c₃) of the six-level families: non-negative
/// with Σ cᵢ² = 1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ZetaParams {
    c: [f64; 4],
}

impl ZetaParams {
    pub fn new(c: [f64; 4]) -> Result<Self> {
        if c.iter().any(|&x| x < 0.0 || !x.is_finite()) {
            return Err(Error::DomainError(
                "coefficients must be non-negative and finite".into(),
            ));
        }
        let sum_sq: f64 = c.iter().map(|x| x * x).sum();
        if (sum_sq - 1.0).abs() > tol::NORM {
            return Err(Error::NormalizationError(format!(
                "sum of squared coefficients is {sum_sq}, expected 1"
            )));
        }
        Ok(Self { c })
    }

    pub fn coefficients(&self) -> [f64; 4] {
        self.c
    }

    /// Squared coefficients (the probabilities entering every closed form).
    pub fn squared(&self) -> [f64; 4] {
        [
            self.c[0] * self.c[0],
            self.c[1] * self.c[1],
            self.c[2] * self.c[2],
            self.c[3] * self.c[3],
        ]
    }
}

/// Sweep parameterization of the family coefficients:
/// c₀ = √((5−2x)/8), c₁ = √((3−x)/8), c₂ = √(x/8), c₃ = √(x/4), x ∈ [0, 1].
pub fn zeta_from_x(x: f64) -> Result<ZetaParams> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::DomainError(format!("x = {x} outside [0, 1]")));
    }
    ZetaParams::new([
        ((5.0 - 2.0 * x) / 8.0).sqrt(),
        ((3.0 - x) / 8.0).sqrt(),
        (x / 8.0).sqrt(),
        (x / 4.0).sqrt(),
    ])
}

/// The tripartite six-level family on `[A:6, B:6, R:6]`:
///
/// c₀/√2 (|000⟩ + |011⟩) + c₁/√2 (|122⟩ + |223⟩) + c₂/√2 (|334⟩ + |444⟩) + c₃ |555⟩
pub fn make_zeta(params: &ZetaParams) -> Result<PureState> {
    let layout = SubsystemLayout::new(vec![("A", 6), ("B", 6), ("R", 6)])?;
    let [c0, c1, c2, c3] = params.coefficients();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    PureState::from_indexed(
        layout,
        &[
            (&[0, 0, 0], C64::new(c0 * h, 0.0)),
            (&[0, 1, 1], C64::new(c0 * h, 0.0)),
            (&[1, 2, 2], C64::new(c1 * h, 0.0)),
            (&[2, 2, 3], C64::new(c1 * h, 0.0)),
            (&[3, 3, 4], C64::new(c2 * h, 0.0)),
            (&[4, 4, 4], C64::new(c2 * h, 0.0)),
            (&[5, 5, 5], C64::new(c3, 0.0)),
        ],
    )
}

/// The four-party six-level family on `[A1:6, A2:6, A3:6, R:6]`:
///
/// c₀/√2 (|0010⟩ + |0101⟩) + c₁/√2 (|1202⟩ + |2213⟩) + c₂/√2 (|3334⟩ + |4444⟩) + c₃ |5555⟩
pub fn make_xi(params: &ZetaParams) -> Result<PureState> {
    let layout = SubsystemLayout::new(vec![("A1", 6), ("A2", 6), ("A3", 6), ("R", 6)])?;
    let [c0, c1, c2, c3] = params.coefficients();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    PureState::from_indexed(
        layout,
        &[
            (&[0, 0, 1, 0], C64::new(c0 * h, 0.0)),
            (&[0, 1, 0, 1], C64::new(c0 * h, 0.0)),
            (&[1, 2, 0, 2], C64::new(c1 * h, 0.0)),
            (&[2, 2, 1, 3], C64::new(c1 * h, 0.0)),
            (&[3, 3, 3, 4], C64::new(c2 * h, 0.0)),
            (&[4, 4, 4, 4], C64::new(c2 * h, 0.0)),
            (&[5, 5, 5, 5], C64::new(c3, 0.0)),
        ],
    )
}

/// (|00⟩ + |11⟩)/√2 on two labeled qubits.
pub fn epr_pair(label_a: &str, label_b: &str) -> Result<PureState> {
    let layout = SubsystemLayout::new(vec![(label_a, 2), (label_b, 2)])?;
    let h = std::f64::consts::FRAC_1_SQRT_2;
    PureState::from_indexed(
        layout,
        &[(&[0, 0], C64::new(h, 0.0)), (&[1, 1], C64::new(h, 0.0))],
    )
}

/// (|000⟩ + |111⟩)/√2 on three labeled qubits.
pub fn ghz_triple(l1: &str, l2: &str, l3: &str) -> Result<PureState> {
    let layout = SubsystemLayout::new(vec![(l1, 2), (l2, 2), (l3, 2)])?;
    let h = std::f64::consts::FRAC_1_SQRT_2;
    PureState::from_indexed(
        layout,
        &[
            (&[0, 0, 0], C64::new(h, 0.0)),
            (&[1, 1, 1], C64::new(h, 0.0)),
        ],
    )
}

/// Named reference states.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NamedState {
    /// (|000⟩ + |111⟩)/√2 on [A:2, B:2, R:2].
    Ghz3,
    /// (|00⟩ + |11⟩)/√2 on [A:2, B:2].
    Epr,
    /// EPR(A, R1) ⊗ EPR(R2, B) on layout [A:2, B:2, R1:2, R2:2]; callers
    /// needing "R" treat the pair {R1, R2} as a set.
    ProductEpr,
}

impl std::str::FromStr for NamedState {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ghz3" | "ghz" => Ok(NamedState::Ghz3),
            "epr" => Ok(NamedState::Epr),
            "product-epr" | "product_epr" | "productepr" => Ok(NamedState::ProductEpr),
            other => Err(Error::UnknownState(other.to_string())),
        }
    }
}

pub fn make_named(name: NamedState) -> Result<PureState> {
    match name {
        NamedState::Ghz3 => ghz_triple("A", "B", "R"),
        NamedState::Epr => epr_pair("A", "B"),
        NamedState::ProductEpr => {
            let layout = SubsystemLayout::new(vec![("A", 2), ("B", 2), ("R1", 2), ("R2", 2)])?;
            let mut entries = Vec::new();
            let indices: Vec<[usize; 4]> = (0..2usize)
                .flat_map(|a| (0..2usize).map(move |r| [a, r, a, r]))
                .collect();
            for idx in &indices {
                entries.push((&idx[..], C64::new(0.5, 0.0)));
            }
            PureState::from_indexed(layout, &entries)
        }
    }
}

/// Swap the basis indices of two equal-dimension subsystems: the final state
/// of the exchange task. An involution; exact on amplitudes.
pub fn exchange_final_state(psi: &PureState, label_a: &str, label_b: &str) -> Result<PureState> {
    let layout = psi.layout();
    let pa = layout.position(label_a)?;
    let pb = layout.position(label_b)?;
    let (da, db) = (layout.entries()[pa].1, layout.entries()[pb].1);
    if da != db {
        return Err(Error::DimMismatch(format!(
            "{label_a} has dimension {da} but {label_b} has {db}"
        )));
    }
    permute_basis(psi, |multi, out| {
        out.copy_from_slice(multi);
        out.swap(pa, pb);
    })
}

/// Cyclic rotation of three equal-dimension parties: party i's index moves
/// to party i+1, so |abc⟩ ↦ |cab⟩ on the given label triple. Order three;
/// exact on amplitudes.
pub fn rotate_final_state(psi: &PureState, labels: [&str; 3]) -> Result<PureState> {
    let layout = psi.layout();
    let p: Vec<usize> = labels
        .iter()
        .map(|l| layout.position(l))
        .collect::<Result<_>>()?;
    let d0 = layout.entries()[p[0]].1;
    if p.iter().any(|&pp| layout.entries()[pp].1 != d0) {
        return Err(Error::DimMismatch(
            "rotation requires three equal-dimension parties".into(),
        ));
    }
    permute_basis(psi, |multi, out| {
        out.copy_from_slice(multi);
        out[p[0]] = multi[p[2]];
        out[p[1]] = multi[p[0]];
        out[p[2]] = multi[p[1]];
    })
}

// ---------------------------------------------------------------------------
// State files
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
pub(crate) struct SystemEntry {
    pub label: String,
    pub dim: usize,
}

#[derive(Serialize, Deserialize)]
pub(crate) struct AmplitudeEntry {
    pub index: Vec<usize>,
    pub re: f64,
    pub im: f64,
}

/// On-disk state format: ordered `systems` plus sparse `amplitudes`;
/// omitted indices are zero. UTF-8 JSON.
#[derive(Serialize, Deserialize)]
pub(crate) struct StateFile {
    pub systems: Vec<SystemEntry>,
    pub amplitudes: Vec<AmplitudeEntry>,
}

impl StateFile {
    pub(crate) fn from_state(psi: &PureState) -> Self {
        let systems = psi
            .layout()
            .entries()
            .iter()
            .map(|(label, dim)| SystemEntry {
                label: clone_label(label),
                dim: *dim,
            })
            .collect();
        let mut amplitudes = Vec::new();
        for (flat, a) in psi.amplitudes().iter().enumerate() {
            if *a == ZERO {
                continue;
            }
            amplitudes.push(AmplitudeEntry {
                index: psi.layout().unflatten(flat),
                re: a.re,
                im: a.im,
            });
        }
        StateFile {
            systems,
            amplitudes,
        }
    }

    pub(crate) fn into_state(self) -> Result<PureState> {
        let layout =
            SubsystemLayout::new(self.systems.into_iter().map(|s| (s.label, s.dim)).collect())
                .map_err(|e| Error::ParseError(format!("bad systems list: {e}")))?;
        let n = layout.len();
        let dims = layout.dims();
        let mut amps = vec![ZERO; layout.total_dim()];
        let mut used = vec![false; layout.total_dim()];
        for entry in &self.amplitudes {
            if entry.index.len() != n {
                return Err(Error::ParseError(format!(
                    "amplitude index {:?} has {} components; layout has {n} systems",
                    entry.index,
                    entry.index.len()
                )));
            }
            for (k, &i) in entry.index.iter().enumerate() {
                if i >= dims[k] {
                    return Err(Error::ParseError(format!(
                        "amplitude index {:?} out of range for system {} (dim {})",
                        entry.index,
                        layout.entries()[k].0,
                        dims[k]
                    )));
                }
            }
            let flat = layout.flatten(&entry.index);
            if used[flat] {
                return Err(Error::ParseError(format!(
                    "duplicate amplitude index {:?}",
                    entry.index
                )));
            }
            used[flat] = true;
            amps[flat] = C64::new(entry.re, entry.im);
        }
        let norm = vec_norm(&amps);
        if (norm - 1.0).abs() > tol::FILE_NORM {
            return Err(Error::NormalizationError(format!(
                "state file norm is {norm}; residual exceeds {}",
                tol::FILE_NORM
            )));
        }
        // Renormalize the residual band so downstream invariants hold.
        for a in &mut amps {
            *a /= norm;
        }
        PureState::new(layout, amps)
    }
}

fn clone_label(label: &str) -> String {
    label.to_string()
}

/// Write a normalized state to a UTF-8 JSON file.
pub fn save_state(psi: &PureState, path: impl AsRef<Path>) -> Result<()> {
    if psi.is_fragment() {
        return Err(Error::DomainError(
            "fragments are not serializable; only normalized states".into(),
        ));
    }
    let file = StateFile::from_state(psi);
    let text = serde_json::to_string_pretty(&file).map_err(|e| Error::ParseError(e.to_string()))?;
    std::fs::write(path, text)?;
    Ok(())
}

/// Read a state file; the norm may deviate by at most [`tol::FILE_NORM`]
/// and is renormalized on load.
pub fn load_state(path: impl AsRef<Path>) -> Result<PureState> {
    let text = std::fs::read_to_string(path)?;
    parse_state(&text)
}

/// Parse a state from JSON text (see [`load_state`]).
pub fn parse_state(text: &str) -> Result<PureState> {
    let file: StateFile =
        serde_json::from_str(text).map_err(|e| Error::ParseError(e.to_string()))?;
    file.into_state()
}

/// Serialize a state to JSON text.
pub fn state_to_json(psi: &PureState) -> Result<String> {
    if psi.is_fragment() {
        return Err(Error::DomainError(
            "fragments are not serializable; only normalized states".into(),
        ));
    }
    serde_json::to_string_pretty(&StateFile::from_state(psi))
        .map_err(|e| Error::ParseError(e.to_string()))
}
