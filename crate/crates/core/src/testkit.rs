//! Deterministic generators for verification: Haar-ish random states,
//! random unitaries, and random states that admit a prescribed basis common
//! subspace by construction. Used by the test suites; exposed because
//! numerical verification outside the crate wants the same generators.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::qlinalg::SubsystemLayout;
use crate::qstate::PureState;

/// A random normalized state: i.i.d. complex Gaussian amplitudes, normalized.
pub fn random_pure_state<R: Rng>(rng: &mut R, layout: SubsystemLayout) -> PureState {
    let d = layout.total_dim();
    let mut amps: Vec<C64> = (0..d)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            C64::new(re, im)
        })
        .collect();
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    for a in &mut amps {
        *a /= norm;
    }
    PureState::new(layout, amps).expect("normalized by construction")
}

/// A Haar-distributed unitary via QR of a complex Gaussian matrix with the
/// usual phase fix.
pub fn random_unitary<R: Rng>(rng: &mut R, d: usize) -> DMatrix<C64> {
    let g = DMatrix::from_fn(d, d, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re, im)
    });
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..d {
        let diag = r[(j, j)];
        let phase = if diag.norm() > 0.0 {
            diag / diag.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        for i in 0..d {
            q[(i, j)] *= phase.conj();
        }
    }
    q
}

/// A random tripartite state on `[A:d, B:d, R:d_r]` that admits the basis
/// common subspace `subset` with identity common unitaries: amplitudes with
/// exactly one index inside the subset are zeroed, and amplitudes inside
/// `subset × subset` are symmetrized (c_ijk = c_jik).
pub fn random_common_subspace_state<R: Rng>(
    rng: &mut R,
    d: usize,
    d_r: usize,
    subset: &[usize],
) -> PureState {
    let layout = SubsystemLayout::new(vec![("A", d), ("B", d), ("R", d_r)]).expect("valid dims");
    let mut amps = vec![C64::new(0.0, 0.0); layout.total_dim()];
    let in_set = |i: usize| subset.contains(&i);
    for a in 0..d {
        for b in 0..d {
            for r in 0..d_r {
                if in_set(a) != in_set(b) {
                    continue; // mixed pairs stay zero
                }
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                amps[layout.flatten(&[a, b, r])] = C64::new(re, im);
            }
        }
    }
    // Symmetrize inside the subset block.
    for &a in subset {
        for &b in subset {
            if a < b {
                for r in 0..d_r {
                    let fwd = layout.flatten(&[a, b, r]);
                    let bwd = layout.flatten(&[b, a, r]);
                    amps[bwd] = amps[fwd];
                }
            }
        }
    }
    let norm = amps.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    for x in &mut amps {
        *x /= norm;
    }
    PureState::new(layout, amps).expect("normalized by construction")
}
