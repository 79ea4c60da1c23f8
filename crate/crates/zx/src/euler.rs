//! Euler-angle decompositions of single-qubit unitaries into phase-gate
//! triples, in both gate orders, with diagram realization.
//!
//! A triple `(α, β, γ)` with global phase `φ` in order ZXZ denotes
//! `e^{iφ} · P_Z(γ) · P_X(β) · P_Z(α)` (α applied first), where
//! `P_Z(θ) = diag(1, e^{iθ})` and `P_X(θ) = H · P_Z(θ) · H`. XZX swaps the
//! roles of the two axes.

use crate::diagram::{Diagram, Generator, NodeKind};
use crate::matrix::ComplexMatrix;
use crate::phase::Phase;
use crate::semantics::hadamard_matrix;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};
use thiserror::Error;

/// Unitarity tolerance for decomposition inputs.
pub const UNITARY_TOL: f64 = 1e-9;

/// Magnitudes below this count as a vanished matrix entry when branching
/// between the generic, diagonal, and anti-diagonal decomposition cases.
const BRANCH_EPS: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum EulerError {
    #[error("expected a 2×2 matrix, got {rows}×{cols}")]
    NotTwoByTwo { rows: usize, cols: usize },
    #[error("matrix is not unitary (defect {defect:.3e})")]
    NotUnitary { defect: f64 },
}

/// Gate order of a phase-gate triple.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EulerOrder {
    Zxz,
    Xzx,
}

impl EulerOrder {
    pub fn flipped(self) -> EulerOrder {
        match self {
            EulerOrder::Zxz => EulerOrder::Xzx,
            EulerOrder::Xzx => EulerOrder::Zxz,
        }
    }
}

impl std::fmt::Display for EulerOrder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EulerOrder::Zxz => "zxz",
            EulerOrder::Xzx => "xzx",
        })
    }
}

/// A phase-gate triple with its global phase; `alpha` is applied first.
#[derive(Clone, Copy, Debug)]
pub struct EulerTriple {
    pub order: EulerOrder,
    pub alpha: Phase,
    pub beta: Phase,
    pub gamma: Phase,
    pub global_phase: Phase,
}

fn p_z(theta: f64) -> ComplexMatrix {
    let mut m = ComplexMatrix::identity(2);
    m.set(1, 1, Complex64::from_polar(1.0, theta));
    m
}

fn p_x(theta: f64) -> ComplexMatrix {
    let h = hadamard_matrix();
    h.mul(&p_z(theta)).mul(&h)
}

/// The matrix of a triple, global phase included.
pub fn recompose(t: &EulerTriple) -> ComplexMatrix {
    let (a, b, g) = (
        t.alpha.to_radians(),
        t.beta.to_radians(),
        t.gamma.to_radians(),
    );
    let m = match t.order {
        EulerOrder::Zxz => p_z(g).mul(&p_x(b)).mul(&p_z(a)),
        EulerOrder::Xzx => p_x(g).mul(&p_z(b)).mul(&p_x(a)),
    };
    m.scale(Complex64::from_polar(1.0, t.global_phase.to_radians()))
}

fn unitarity_defect(u: &ComplexMatrix) -> f64 {
    u.dagger().mul(u).distance(&ComplexMatrix::identity(2))
}

fn check_input(u: &ComplexMatrix) -> Result<(), EulerError> {
    if u.rows() != 2 || u.cols() != 2 {
        return Err(EulerError::NotTwoByTwo {
            rows: u.rows(),
            cols: u.cols(),
        });
    }
    let defect = unitarity_defect(u);
    if defect > UNITARY_TOL {
        return Err(EulerError::NotUnitary { defect });
    }
    Ok(())
}

/// The ZXZ angles of a unitary, before global-phase extraction.
fn zxz_angles(u: &ComplexMatrix) -> (f64, f64, f64) {
    let (u00, u01, u10, u11) = (u.at(0, 0), u.at(0, 1), u.at(1, 0), u.at(1, 1));
    if u01.norm() <= BRANCH_EPS && u10.norm() <= BRANCH_EPS {
        // Diagonal: a bare Z-phase gate.
        return ((u11 / u00).arg(), 0.0, 0.0);
    }
    if u00.norm() <= BRANCH_EPS && u11.norm() <= BRANCH_EPS {
        // Anti-diagonal: a π rotation; push everything into α.
        return (u01.arg() - u10.arg(), PI, 0.0);
    }
    let beta = 2.0 * u10.norm().atan2(u00.norm());
    let alpha = (u01 / u00).arg() + FRAC_PI_2;
    let gamma = (u10 / u00).arg() + FRAC_PI_2;
    (alpha, beta, gamma)
}

/// Decomposes a 2×2 unitary into a phase-gate triple in the given order.
///
/// The β angle lands in [0, π]; the global phase is chosen so the
/// recomposition reproduces the input exactly (up to float roundoff).
pub fn decompose(u: &ComplexMatrix, order: EulerOrder) -> Result<EulerTriple, EulerError> {
    check_input(u)?;
    let base = match order {
        EulerOrder::Zxz => u.clone(),
        // An XZX triple of U is a ZXZ triple of HUH with the same angles.
        EulerOrder::Xzx => {
            let h = hadamard_matrix();
            h.mul(u).mul(&h)
        }
    };
    let (alpha, beta, gamma) = zxz_angles(&base);
    let mut t = EulerTriple {
        order,
        alpha: Phase::radians(alpha),
        beta: Phase::radians(beta),
        gamma: Phase::radians(gamma),
        global_phase: Phase::ZERO,
    };
    let aligned = recompose(&t);
    t.global_phase = Phase::radians(aligned.inner(u).arg());
    Ok(t)
}

/// Re-expresses a triple in the other gate order, numerically.
pub fn color_swap(t: &EulerTriple) -> Result<EulerTriple, EulerError> {
    decompose(&recompose(t), t.order.flipped())
}

/// Realizes a triple as a 1 → 1 spider chain.
///
/// The chain of phase spiders carries the three angles; the global phase is
/// not representable by the chain and is returned separately.
pub fn as_diagram(t: &EulerTriple) -> (Diagram, Phase) {
    let spiders: [Generator; 3] = match t.order {
        EulerOrder::Zxz => [
            Generator::ZSpider(t.alpha),
            Generator::XSpider(t.beta),
            Generator::ZSpider(t.gamma),
        ],
        EulerOrder::Xzx => [
            Generator::XSpider(t.alpha),
            Generator::ZSpider(t.beta),
            Generator::XSpider(t.gamma),
        ],
    };
    let mut d = Diagram::new();
    let input = d.add_node(NodeKind::B);
    let mut prev = input;
    for g in spiders {
        let kind = match g {
            Generator::ZSpider(p) => NodeKind::Z(p),
            Generator::XSpider(p) => NodeKind::X(p),
            _ => unreachable!(),
        };
        let s = d.add_node(kind);
        d.add_edge(prev, s);
        prev = s;
    }
    let output = d.add_node(NodeKind::B);
    d.add_edge(prev, output);
    d.mark_input(input);
    d.mark_output(output);
    (d, t.global_phase)
}

/// A Haar-random 2×2 unitary: two Gaussian columns, Gram-Schmidt, then a
/// random phase on the second column.
pub fn random_unitary(rng: &mut impl Rng) -> ComplexMatrix {
    let mut gaussian = || {
        // Box-Muller.
        let u1: f64 = rng.gen::<f64>().max(f64::MIN_POSITIVE);
        let u2: f64 = rng.gen();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    };
    let mut col = |_: usize| {
        [
            Complex64::new(gaussian(), gaussian()),
            Complex64::new(gaussian(), gaussian()),
        ]
    };
    let a = col(0);
    let mut b = col(1);
    let na = (a[0].norm_sqr() + a[1].norm_sqr()).sqrt();
    let a = [a[0] / na, a[1] / na];
    let ip = a[0].conj() * b[0] + a[1].conj() * b[1];
    b = [b[0] - ip * a[0], b[1] - ip * a[1]];
    let nb = (b[0].norm_sqr() + b[1].norm_sqr()).sqrt();
    let phase = Complex64::from_polar(1.0, rng.gen::<f64>() * std::f64::consts::TAU);
    let b = [b[0] / nb * phase, b[1] / nb * phase];
    ComplexMatrix::from_vec(2, 2, vec![a[0], b[0], a[1], b[1]]).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn hadamard_decomposes_into_quarter_turns() {
        let h = hadamard_matrix();
        let t = decompose(&h, EulerOrder::Zxz).unwrap();
        let quarter = Phase::rational(1, 2);
        assert!(t.alpha.congruent(quarter, 1e-12));
        assert!(t.beta.congruent(quarter, 1e-12));
        assert!(t.gamma.congruent(quarter, 1e-12));
        assert!(t
            .global_phase
            .congruent(Phase::rational(-1, 4), 1e-12));
        assert!(recompose(&t).distance(&h) <= 1e-12);
    }

    #[test]
    fn diagonal_unitaries_use_the_degenerate_branch() {
        let u = {
            let mut m = ComplexMatrix::identity(2);
            m.set(1, 1, Complex64::from_polar(1.0, 0.7));
            m.scale(Complex64::from_polar(1.0, 0.2))
        };
        let t = decompose(&u, EulerOrder::Zxz).unwrap();
        assert!(t.beta.congruent(Phase::ZERO, 1e-12));
        assert!(t.gamma.congruent(Phase::ZERO, 1e-12));
        assert!(t.alpha.congruent(Phase::radians(0.7), 1e-12));
        assert!(t.global_phase.congruent(Phase::radians(0.2), 1e-12));
        assert!(recompose(&t).distance(&u) <= 1e-12);
    }

    #[test]
    fn anti_diagonal_unitaries_get_a_half_turn() {
        let x = ComplexMatrix::from_vec(
            2,
            2,
            vec![c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)],
        )
        .unwrap();
        let t = decompose(&x, EulerOrder::Zxz).unwrap();
        assert!(t.beta.congruent(Phase::PI, 1e-12));
        assert!(recompose(&t).distance(&x) <= 1e-12);
        // In the XZX order the same gate is a single-axis rotation.
        let t = decompose(&x, EulerOrder::Xzx).unwrap();
        assert!(recompose(&t).distance(&x) <= 1e-12);
    }

    #[test]
    fn random_unitaries_roundtrip_in_both_orders() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..200 {
            let u = random_unitary(&mut rng);
            for order in [EulerOrder::Zxz, EulerOrder::Xzx] {
                let t = decompose(&u, order).unwrap();
                assert!(
                    recompose(&t).distance(&u) <= 1e-9,
                    "order {order}: {:.3e}",
                    recompose(&t).distance(&u)
                );
                assert!(t.beta.to_radians() <= PI + 1e-12);
            }
        }
    }

    #[test]
    fn order_flip_preserves_the_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let u = random_unitary(&mut rng);
            let t = decompose(&u, EulerOrder::Zxz).unwrap();
            let s = color_swap(&t).unwrap();
            assert_eq!(s.order, EulerOrder::Xzx);
            assert!(recompose(&s).distance(&recompose(&t)) <= 1e-9);
        }
    }

    #[test]
    fn diagram_realization_matches_up_to_global_phase() {
        use crate::semantics::{interpret, Model};
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for order in [EulerOrder::Zxz, EulerOrder::Xzx] {
            let u = random_unitary(&mut rng);
            let t = decompose(&u, order).unwrap();
            let (d, phi) = as_diagram(&t);
            let m = interpret(&d, Model::STANDARD).unwrap();
            let lifted = m.scale(Complex64::from_polar(1.0, phi.to_radians()));
            assert!(lifted.distance(&u) <= 1e-9);
        }
    }

    #[test]
    fn bad_inputs_are_rejected() {
        let tall = ComplexMatrix::zeros(4, 2);
        assert!(matches!(
            decompose(&tall, EulerOrder::Zxz),
            Err(EulerError::NotTwoByTwo { .. })
        ));
        let skew = ComplexMatrix::from_vec(
            2,
            2,
            vec![c(1.0, 0.0), c(0.4, 0.0), c(0.0, 0.0), c(1.0, 0.0)],
        )
        .unwrap();
        assert!(matches!(
            decompose(&skew, EulerOrder::Zxz),
            Err(EulerError::NotUnitary { .. })
        ));
    }
}
