//! A machine-checkable separation certificate: two diagrams with equal
//! standard semantics that an angle-multiplied interpretation tells apart.
//!
//! Both diagrams are a three-spider phase chain with a zero-legged spider
//! island. The first chain uses rational phases (π/3, 2π/3, π/3); the second
//! uses transcendental angles chosen so the two chains agree up to the global
//! phase `e^{iφ}`, which the islands `Z(∓φ)` cancel exactly. Multiplying all
//! angles by −3 turns the first chain into the identity while the second
//! stays far from any scalar multiple of it, so no rewrite system whose rules
//! also hold under the k = −3 interpretation can connect the two diagrams.

use crate::diagram::{Diagram, DiagramDoc, NodeKind};
use crate::matrix::{compare, CompareMode, MatrixError};
use crate::phase::Phase;
use crate::semantics::{interpret, Model, SemanticsError};
use serde::Serialize;
use std::f64::consts::FRAC_PI_3;
use thiserror::Error;

/// The multiplier that separates the pair.
pub const SEPARATOR_K: i64 = -3;

/// Default residual floor a separation must clear.
pub const DEFAULT_SEPARATION_FLOOR: f64 = 0.1;

#[derive(Debug, Error)]
pub enum CertError {
    #[error(transparent)]
    Semantics(#[from] SemanticsError),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
}

/// First chain angle of the second diagram, in radians: −arccos(5 / (2√13)).
pub fn alpha() -> f64 {
    -(5.0 / (2.0 * 13.0_f64.sqrt())).acos()
}

/// Middle angle of the second diagram, in radians: −2·arcsin(√3 / 4).
pub fn beta() -> f64 {
    -2.0 * (3.0_f64.sqrt() / 4.0).asin()
}

/// Global phase between the two chains, in radians: arcsin(√3 / 4) − α.
pub fn phi() -> f64 {
    (3.0_f64.sqrt() / 4.0).asin() - alpha()
}

/// A 1 → 1 chain of three phase spiders; `colors[i]` true means green.
fn chain(spec: [(bool, Phase); 3]) -> Diagram {
    let mut d = Diagram::new();
    let input = d.add_node(NodeKind::B);
    let mut prev = input;
    for (green, p) in spec {
        let s = d.add_node(if green { NodeKind::Z(p) } else { NodeKind::X(p) });
        d.add_edge(prev, s);
        prev = s;
    }
    let output = d.add_node(NodeKind::B);
    d.add_edge(prev, output);
    d.mark_input(input);
    d.mark_output(output);
    d
}

/// The two bare chains, without their scalar islands.
///
/// The first is Z(π/3) · X(2π/3) · Z(π/3) with exact rational phases; the
/// second is X(α − π/3) · Z(β) · X(α − π/3). They are equal up to the global
/// phase `e^{iφ}`.
pub fn build_chains() -> (Diagram, Diagram) {
    let c1 = chain([
        (true, Phase::rational(1, 3)),
        (false, Phase::rational(2, 3)),
        (true, Phase::rational(1, 3)),
    ]);
    let outer = Phase::radians(alpha() - FRAC_PI_3);
    let c2 = chain([
        (false, outer),
        (true, Phase::radians(beta())),
        (false, outer),
    ]);
    (c1, c2)
}

/// The certified pair: each chain with a zero-legged spider island `Z(∓φ)`
/// whose scalar value absorbs the relative phase, making the two diagrams
/// equal on the nose under the standard interpretation.
pub fn build_counterexample() -> (Diagram, Diagram) {
    let (mut d1, mut d2) = build_chains();
    d1.add_node(NodeKind::Z(Phase::radians(-phi())));
    d2.add_node(NodeKind::Z(Phase::radians(phi())));
    (d1, d2)
}

/// Checks one diagram pair: equality under the standard interpretation and
/// separation (failure up to any nonzero scalar) under multiplier `k`.
#[derive(Clone, Debug, Serialize)]
pub struct PairCheck {
    pub k: i64,
    pub tolerance: f64,
    pub separation_floor: f64,
    /// Residual of the exact comparison at k = 1.
    pub standard_exact_residual: f64,
    pub standard_exact_ok: bool,
    /// Residual and witness of the global-phase comparison at k = 1.
    pub standard_phase_residual: f64,
    pub standard_witness: [f64; 2],
    /// Equal at k = 1, exactly or up to global phase.
    pub equal_standard: bool,
    /// Best-scalar residual at multiplier `k`, and the scalar used.
    pub separation_residual: f64,
    pub separation_lambda: [f64; 2],
    /// The separation residual clears the floor.
    pub separates: bool,
    /// Equal standardly and separated at `k`.
    pub certified: bool,
}

/// Compares a pair at k = 1 and at the separating multiplier.
pub fn verify_pair(
    d1: &Diagram,
    d2: &Diagram,
    k: i64,
    tolerance: f64,
    floor: f64,
) -> Result<PairCheck, CertError> {
    let m1 = interpret(d1, Model::STANDARD)?;
    let m2 = interpret(d2, Model::STANDARD)?;
    let exact = compare(&m1, &m2, CompareMode::Exact, tolerance)?;
    let phase = compare(&m1, &m2, CompareMode::UpToGlobalPhase, tolerance)?;
    let k1 = interpret(d1, Model::new(k))?;
    let k2 = interpret(d2, Model::new(k))?;
    let scalar = compare(&k1, &k2, CompareMode::UpToNonzeroScalar, tolerance)?;
    let equal_standard = exact.equivalent || phase.equivalent;
    let separates = scalar.residual >= floor;
    Ok(PairCheck {
        k,
        tolerance,
        separation_floor: floor,
        standard_exact_residual: exact.residual,
        standard_exact_ok: exact.equivalent,
        standard_phase_residual: phase.residual,
        standard_witness: [phase.witness.re, phase.witness.im],
        equal_standard,
        separation_residual: scalar.residual,
        separation_lambda: [scalar.witness.re, scalar.witness.im],
        separates,
        certified: equal_standard && separates,
    })
}

/// The full certificate for the built-in pair.
#[derive(Clone, Debug, Serialize)]
pub struct Certificate {
    pub d1: DiagramDoc,
    pub d2: DiagramDoc,
    pub separator_k: i64,
    pub pair: PairCheck,
    /// Distance of the first bare chain from the identity at the separator.
    pub chain_identity_distance: f64,
    /// Best-scalar residual of the pair at k = 1; must stay under the floor,
    /// confirming the separation is genuinely about the multiplier.
    pub standard_guard_residual: f64,
    pub certified: bool,
}

/// Builds and checks the certificate.
///
/// Certification requires exact equality at k = 1 within `tolerance`, a
/// separation residual of at least `floor` at k = −3, and no separation at
/// k = 1.
pub fn verify(tolerance: f64, floor: f64) -> Result<Certificate, CertError> {
    let (d1, d2) = build_counterexample();
    let pair = verify_pair(&d1, &d2, SEPARATOR_K, tolerance, floor)?;

    let (c1, _) = build_chains();
    let chain_at_k = interpret(&c1, Model::new(SEPARATOR_K))?;
    let chain_identity_distance = chain_at_k.distance(&crate::matrix::ComplexMatrix::identity(2));

    let m1 = interpret(&d1, Model::STANDARD)?;
    let m2 = interpret(&d2, Model::STANDARD)?;
    let guard = compare(&m1, &m2, CompareMode::UpToNonzeroScalar, tolerance)?;

    let certified = pair.standard_exact_ok && pair.separates && guard.residual < floor;
    Ok(Certificate {
        d1: DiagramDoc::from(&d1),
        d2: DiagramDoc::from(&d2),
        separator_k: SEPARATOR_K,
        pair,
        chain_identity_distance,
        standard_guard_residual: guard.residual,
        certified,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn angle_constants_are_frozen() {
        assert!((alpha() - (-0.8046336771011123)).abs() < 1e-15);
        assert!((beta() - (-0.8956647938578649)).abs() < 1e-15);
        assert!((phi() - 1.2524660740300448).abs() < 1e-15);
        // |α| ≈ 0.2561π.
        assert!((alpha().abs() / std::f64::consts::PI - 0.2561).abs() < 1e-4);
    }

    #[test]
    fn diagrams_are_well_formed() {
        let (d1, d2) = build_counterexample();
        assert!(d1.validate().is_empty());
        assert!(d2.validate().is_empty());
        assert_eq!(d1.node_count(), 6);
        assert_eq!(d2.node_count(), 6);
        assert_eq!(d1.inputs().len(), 1);
        assert_eq!(d1.outputs().len(), 1);
    }

    #[test]
    fn chains_differ_by_the_global_phase() {
        let (c1, c2) = build_chains();
        let m1 = interpret(&c1, Model::STANDARD).unwrap();
        let m2 = interpret(&c2, Model::STANDARD).unwrap();
        let r = compare(&m1, &m2, CompareMode::UpToGlobalPhase, 1e-9).unwrap();
        assert!(r.equivalent);
        let expect = Complex64::from_polar(1.0, phi());
        assert!((r.witness - expect).norm() < 1e-9);
    }

    #[test]
    fn pair_is_exactly_equal_standardly() {
        let (d1, d2) = build_counterexample();
        let m1 = interpret(&d1, Model::STANDARD).unwrap();
        let m2 = interpret(&d2, Model::STANDARD).unwrap();
        assert!(m1.distance(&m2) <= 1e-12);
    }

    #[test]
    fn first_chain_collapses_to_identity_at_separator() {
        let (c1, _) = build_chains();
        let m = interpret(&c1, Model::new(SEPARATOR_K)).unwrap();
        assert!(m.distance(&crate::matrix::ComplexMatrix::identity(2)) <= 1e-12);
    }

    #[test]
    fn certificate_verifies_with_frozen_separation() {
        let cert = verify(1e-9, DEFAULT_SEPARATION_FLOOR).unwrap();
        assert!(cert.certified);
        assert!(cert.pair.standard_exact_ok);
        assert!(cert.pair.standard_exact_residual <= 1e-12);
        assert!((cert.pair.separation_residual - 0.844962616).abs() < 1e-6);
        assert!(cert.chain_identity_distance <= 1e-12);
        assert!(cert.standard_guard_residual < 1e-9);
    }

    #[test]
    fn standard_interpretation_does_not_separate() {
        let (d1, d2) = build_counterexample();
        let check = verify_pair(&d1, &d2, 1, 1e-9, DEFAULT_SEPARATION_FLOOR).unwrap();
        assert!(check.equal_standard);
        assert!(!check.separates);
    }

    #[test]
    fn certificate_serializes() {
        let cert = verify(1e-9, DEFAULT_SEPARATION_FLOOR).unwrap();
        let json = serde_json::to_string_pretty(&cert).unwrap();
        assert!(json.contains("\"certified\": true"));
        assert!(json.contains("\"separator_k\": -3"));
    }
}
