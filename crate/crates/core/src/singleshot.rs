//! Exact single-shot subspace exchange on concrete state vectors, with ebit
//! accounting.
//!
//! Teleportation is modeled as an accounted index exchange, not a
//! gate-level circuit: the verifiable claims are the final state and the
//! ebit count. After canonicalization the stretched ancilla register is
//! supported on {|0⟩} ∪ {|d_C⟩, …, |d−1⟩}, so each of the two teleports
//! moves an effective dimension `d_eff = d − d_C + 1` (plain `d` when no
//! common subspace is known), costing log₂(d_eff) ebits. Physical ebits are
//! integral, so the ledger also carries the ⌈log₂⌉ rounding and the
//! classical-bit count 2·⌈log₂(d_eff)⌉ per direction as informational
//! fields.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::qlinalg::{factor_basis_slice, permute_basis, trace_distance, DensityOperator};
use crate::qstate::{exchange_final_state, PureState};
use crate::subspace::{apply_stretch_map, stretch_with_pipeline, CommonSubspaceCert};
use crate::tol;

/// Resource mechanism of a ledger entry.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Mechanism {
    /// A qudit teleportation of the stated effective dimension.
    TeleportQudit,
    /// Local processing only.
    None,
}

#[derive(Clone, Debug, Serialize)]
pub struct LedgerEntry {
    pub step: String,
    pub ebits: f64,
    /// ⌈log₂(d_eff)⌉ for teleports; 0 otherwise.
    pub ebits_integer: u32,
    /// Classical bits consumed (2 per teleported qubit-equivalent).
    pub classical_bits: u32,
    pub mechanism: Mechanism,
}

/// Consumed-entanglement log for one protocol run, in ebits.
#[derive(Clone, Debug, Default, Serialize)]
pub struct EbitLedger {
    pub entries: Vec<LedgerEntry>,
}

impl EbitLedger {
    fn local(&mut self, step: &str) {
        self.entries.push(LedgerEntry {
            step: step.to_string(),
            ebits: 0.0,
            ebits_integer: 0,
            classical_bits: 0,
            mechanism: Mechanism::None,
        });
    }

    fn teleport(&mut self, step: &str, d_eff: usize) {
        let ebits = (d_eff as f64).log2();
        let integer = (d_eff as f64).log2().ceil() as u32;
        self.entries.push(LedgerEntry {
            step: step.to_string(),
            ebits,
            ebits_integer: integer,
            classical_bits: 2 * integer,
            mechanism: Mechanism::TeleportQudit,
        });
    }

    /// Total ebits consumed (real-valued accounting).
    pub fn total(&self) -> f64 {
        self.entries.iter().map(|e| e.ebits).sum()
    }

    /// Total under integral-ebit accounting (⌈log₂⌉ per teleport).
    pub fn total_integer(&self) -> u32 {
        self.entries.iter().map(|e| e.ebits_integer).sum()
    }

    pub fn total_classical_bits(&self) -> u32 {
        self.entries.iter().map(|e| e.classical_bits).sum()
    }
}

/// Entanglement cost of swapping two unknown d-level systems by two qudit
/// teleportations: 2·log₂(d).
pub fn naive_swap_cost(d: usize) -> Result<f64> {
    if d < 2 {
        return Err(Error::DomainError(format!(
            "swap needs dimension >= 2, got {d}"
        )));
    }
    Ok(2.0 * (d as f64).log2())
}

/// Effective teleport dimension of the stretched ancilla register:
/// |{0} ∪ {d_C, …, d−1}|.
pub fn effective_dim(d: usize, d_c: usize) -> usize {
    if d_c == 0 {
        d
    } else {
        d - d_c + 1
    }
}

/// Run the exact single-shot subspace exchange: common unitaries,
/// canonicalization, routing onto ancillas, teleport-exchange of A′ and B′,
/// inverse routing, ancilla discard, and the swapped inverse unitaries.
/// Asserts that the output equals the exchanged input to trace distance
/// [`tol::PROTOCOL_DISTANCE`] and returns it with the ledger.
///
/// `None` for the certificate is the blind path: the whole register is
/// teleported both ways at the naive cost.
pub fn run_exact_sse(
    psi: &PureState,
    cert: Option<&CommonSubspaceCert>,
) -> Result<(PureState, EbitLedger)> {
    let mut ledger = EbitLedger::default();
    let d = psi.layout().dim_of("A")?;

    // Steps (i)+(ii): common unitaries, canonicalization, ancilla routing.
    let (stretched, pipeline) = stretch_with_pipeline(psi, cert)?;
    ledger.local("common unitaries + canonicalization");
    ledger.local("route uncommon block onto ancillas");

    // Step (iii): exchange A' and B' by two teleports of the effective
    // support dimension.
    let d_eff = effective_dim(d, pipeline.d_common);
    let layout = stretched.state.layout();
    let pa = layout.position("A'")?;
    let pb = layout.position("B'")?;
    let exchanged = permute_basis(&stretched.state, |multi, out| {
        out.copy_from_slice(multi);
        out.swap(pa, pb);
    })?;
    if d_eff > 1 {
        ledger.teleport("teleport A' to Bob", d_eff);
        ledger.teleport("teleport B' to Alice", d_eff);
    } else {
        ledger.local("common subspace covers everything; nothing to move");
    }

    // Step (iv): inverse routing.
    let unrouted = apply_stretch_map(&exchanged, "A", "A'", pipeline.d_common, true)?;
    let unrouted = apply_stretch_map(&unrouted, "B", "B'", pipeline.d_common, true)?;
    ledger.local("inverse ancilla routing");

    // The ancillas must factor out as |0⟩|0⟩.
    let (folded, off_norm) = {
        let layout = unrouted.layout();
        let mut off_norm = 0.0f64;
        let mut multi = vec![0usize; layout.len()];
        for (flat, a) in unrouted.amplitudes().iter().enumerate() {
            if *a == num_complex::Complex64::new(0.0, 0.0) {
                continue;
            }
            layout.unflatten_into(flat, &mut multi);
            let pa = layout.position("A'")?;
            let pb = layout.position("B'")?;
            if multi[pa] != 0 || multi[pb] != 0 {
                off_norm += a.norm_sqr();
            }
        }
        (
            factor_basis_slice(&unrouted, &[("A'", 0), ("B'", 0)]),
            off_norm.sqrt(),
        )
    };
    if off_norm > tol::ANCILLA_FACTOR {
        return Err(Error::ProtocolError(format!(
            "ancilla registers failed to factor out (residual {off_norm:.3e}); \
             the certificate does not match the state"
        )));
    }
    let (folded, _) = folded?;
    ledger.local("discard ancillas");

    // Step (v): undo the canonicalization, then the swapped inverses
    // W† on A, V† on B.
    let mut final_state = folded;
    if let Some(map) = &pipeline.canonical {
        final_state = map.apply_inverse(&final_state, "A")?;
        final_state = map.apply_inverse(&final_state, "B")?;
    }
    if let Some(cert) = cert {
        let (v, w) = cert.common_unitaries();
        let identity = nalgebra::DMatrix::identity(cert.dim(), cert.dim());
        if *v != identity || *w != identity {
            final_state = crate::qlinalg::apply_local_matrix(&final_state, &["A"], &w.adjoint())?;
            final_state = crate::qlinalg::apply_local_matrix(&final_state, &["B"], &v.adjoint())?;
        }
    }
    ledger.local("swapped inverse common unitaries");

    let expected = exchange_final_state(psi, "A", "B")?;
    let distance = trace_distance(
        &DensityOperator::from_pure(&final_state)?,
        &DensityOperator::from_pure(&expected)?,
    )?;
    if distance > tol::PROTOCOL_DISTANCE {
        return Err(Error::ProtocolError(format!(
            "protocol output is {distance:.3e} away from the exchanged state"
        )));
    }
    Ok((final_state, ledger))
}

/// Ebits saved over blind double teleportation:
/// naive_swap_cost(d) − ledger total. Non-negative for any verified
/// certificate; zero on the no-certificate path.
pub fn savings(psi: &PureState, cert: Option<&CommonSubspaceCert>) -> Result<f64> {
    let d = psi.layout().dim_of("A")?;
    let (_, ledger) = run_exact_sse(psi, cert)?;
    Ok(naive_swap_cost(d)? - ledger.total())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qlinalg::SubsystemLayout;
    use crate::qstate::{make_named, make_zeta, zeta_from_x, NamedState};
    use crate::subspace::verify_common;
    use crate::testkit;
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    fn zeta_cert(zeta: &PureState) -> CommonSubspaceCert {
        let cert = CommonSubspaceCert::from_indices(6, vec![3, 4, 5]).unwrap();
        verify_common(zeta, &cert).unwrap()
    }

    fn protocol_distance(a: &PureState, b: &PureState) -> f64 {
        trace_distance(
            &DensityOperator::from_pure(a).unwrap(),
            &DensityOperator::from_pure(b).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn naive_costs() {
        assert!((naive_swap_cost(6).unwrap() - 5.16993).abs() < 1e-4);
        assert!((naive_swap_cost(2).unwrap() - 2.0).abs() < 1e-12);
        assert!((naive_swap_cost(4).unwrap() - 4.0).abs() < 1e-12);
        assert!(matches!(naive_swap_cost(1), Err(Error::DomainError(_))));
    }

    #[test]
    fn effective_dims() {
        assert_eq!(effective_dim(6, 3), 4);
        assert_eq!(effective_dim(6, 0), 6);
        assert_eq!(effective_dim(6, 6), 1);
        assert_eq!(effective_dim(6, 1), 6);
    }

    #[test]
    fn zeta_exchange_costs_four_ebits() {
        let zeta = make_zeta(&zeta_from_x(0.5).unwrap()).unwrap();
        let cert = zeta_cert(&zeta);
        let (final_state, ledger) = run_exact_sse(&zeta, Some(&cert)).unwrap();
        let expected = exchange_final_state(&zeta, "A", "B").unwrap();
        assert!(protocol_distance(&final_state, &expected) <= 1e-10);
        assert_eq!(ledger.total(), 4.0);
        assert_eq!(ledger.total_integer(), 4);
        assert_eq!(ledger.total_classical_bits(), 8);
    }

    #[test]
    fn zeta_savings_match_the_naive_gap() {
        let zeta = make_zeta(&zeta_from_x(0.25).unwrap()).unwrap();
        let cert = zeta_cert(&zeta);
        let saved = savings(&zeta, Some(&cert)).unwrap();
        assert!((saved - 1.16993).abs() < 1e-4, "saved {saved}");
    }

    #[test]
    fn ghz_full_space_costs_nothing() {
        let ghz = make_named(NamedState::Ghz3).unwrap();
        let cert = CommonSubspaceCert::from_indices(2, vec![0, 1]).unwrap();
        let cert = verify_common(&ghz, &cert).unwrap();
        let (final_state, ledger) = run_exact_sse(&ghz, Some(&cert)).unwrap();
        assert!(protocol_distance(&final_state, &ghz) <= 1e-12);
        assert_eq!(ledger.total(), 0.0);
        assert!((savings(&ghz, Some(&cert)).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn blind_path_reduces_to_naive_teleportation() {
        let zeta = make_zeta(&zeta_from_x(0.8).unwrap()).unwrap();
        let (final_state, ledger) = run_exact_sse(&zeta, None).unwrap();
        let expected = exchange_final_state(&zeta, "A", "B").unwrap();
        assert!(protocol_distance(&final_state, &expected) <= 1e-10);
        assert!((ledger.total() - naive_swap_cost(6).unwrap()).abs() < 1e-12);
        assert!(savings(&zeta, None).unwrap().abs() < 1e-12);
    }

    #[test]
    fn random_certified_states_exchange_exactly() {
        let mut rng = StdRng::seed_from_u64(43);
        for trial in 0..100 {
            let subset: Vec<usize> = match trial % 3 {
                0 => vec![0],
                1 => vec![2, 3],
                _ => vec![0, 1, 3],
            };
            let psi = testkit::random_common_subspace_state(&mut rng, 4, 3, &subset);
            let cert = CommonSubspaceCert::from_indices(4, subset).unwrap();
            let cert = verify_common(&psi, &cert).unwrap();
            assert!(cert.is_verified());
            let (final_state, ledger) = run_exact_sse(&psi, Some(&cert)).unwrap();
            let expected = exchange_final_state(&psi, "A", "B").unwrap();
            assert!(protocol_distance(&final_state, &expected) <= 1e-9);
            let d_eff = effective_dim(4, cert.d_common());
            assert!((ledger.total() - 2.0 * (d_eff as f64).log2()).abs() < 1e-12);
        }
    }

    #[test]
    fn cost_is_monotone_in_subspace_dimension() {
        let mut previous = f64::INFINITY;
        for d_c in 0..=6 {
            let cost = 2.0 * (effective_dim(6, d_c) as f64).log2();
            assert!(
                cost <= previous + 1e-12,
                "d_C={d_c} cost {cost} > {previous}"
            );
            previous = cost;
        }
    }

    #[test]
    fn savings_are_never_negative_on_verified_certs() {
        let mut rng = StdRng::seed_from_u64(47);
        for trial in 0..20 {
            let subset: Vec<usize> = if trial % 2 == 0 { vec![1] } else { vec![0, 2] };
            let psi = testkit::random_common_subspace_state(&mut rng, 3, 4, &subset);
            let cert = CommonSubspaceCert::from_indices(3, subset).unwrap();
            let cert = verify_common(&psi, &cert).unwrap();
            let saved = savings(&psi, Some(&cert)).unwrap();
            assert!(saved >= -1e-12, "negative savings {saved}");
        }
    }

    #[test]
    fn unverified_cert_is_rejected() {
        let zeta = make_zeta(&zeta_from_x(0.5).unwrap()).unwrap();
        let cert = CommonSubspaceCert::from_indices(6, vec![3, 4, 5]).unwrap();
        assert!(matches!(
            run_exact_sse(&zeta, Some(&cert)),
            Err(Error::NotCommon(_))
        ));
    }

    #[test]
    fn mismatched_cert_fails_as_protocol_error() {
        // A certificate verified for one state, replayed against another:
        // the ancillas no longer factor out.
        let mut rng = StdRng::seed_from_u64(53);
        let good = testkit::random_common_subspace_state(&mut rng, 4, 3, &[0, 1]);
        let cert = CommonSubspaceCert::from_indices(4, vec![0, 1]).unwrap();
        let cert = verify_common(&good, &cert).unwrap();
        assert!(cert.is_verified());
        let layout = SubsystemLayout::new(vec![("A", 4), ("B", 4), ("R", 3)]).unwrap();
        let other = testkit::random_pure_state(&mut rng, layout);
        let result = run_exact_sse(&other, Some(&cert));
        assert!(matches!(result, Err(Error::ProtocolError(_))));
    }
}
