//! Angles in the circle group `[0, 2π)`.
//!
//! Phases are kept as exact rational multiples of π whenever they are built
//! from exact inputs, so that integer rescaling (the model parameter `k`) and
//! phase addition never accumulate float drift on Clifford-style angles. A
//! float fallback covers irrational angles such as `arccos(5/(2√13))`.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;

/// Radian tolerance when a rational phase is compared against a float phase
/// denoting the same angle.
pub const PHASE_CROSS_TOL: f64 = 1e-12;

const TAU: f64 = 2.0 * PI;

/// An angle in `[0, 2π)`, exact when possible.
///
/// `Rational { num, den }` denotes `(num/den)·π`, in lowest terms with
/// `0 ≤ num/den < 2`. `Float(r)` holds radians already reduced into
/// `[0, 2π)`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(try_from = "PhaseRepr", into = "PhaseRepr")]
pub enum Phase {
    Rational { num: i64, den: i64 },
    Float(f64),
}

impl Phase {
    /// The zero angle.
    pub const ZERO: Phase = Phase::Rational { num: 0, den: 1 };

    /// The angle π.
    pub const PI: Phase = Phase::Rational { num: 1, den: 1 };

    /// Builds the exact phase `(num/den)·π`, reduced modulo 2π into lowest
    /// terms. `den` must be nonzero.
    pub fn rational(num: i64, den: i64) -> Phase {
        assert!(den != 0, "phase denominator must be nonzero");
        Self::rational_i128(num as i128, den as i128)
    }

    fn rational_i128(mut num: i128, mut den: i128) -> Phase {
        if den < 0 {
            num = -num;
            den = -den;
        }
        // Reduce modulo 2π, i.e. modulo 2·den on the numerator.
        num = num.rem_euclid(2 * den);
        let g = gcd(num.unsigned_abs(), den.unsigned_abs());
        num /= g as i128;
        den /= g as i128;
        if num > i64::MAX as i128 || den > i64::MAX as i128 {
            // Out-of-range exact form; fall back to radians.
            return Phase::radians(num as f64 * PI / den as f64);
        }
        Phase::Rational {
            num: num as i64,
            den: den as i64,
        }
    }

    /// Builds a float phase from radians, reduced into `[0, 2π)`.
    pub fn radians(r: f64) -> Phase {
        assert!(r.is_finite(), "phase must be finite");
        let mut v = r.rem_euclid(TAU);
        if v >= TAU {
            v = 0.0;
        }
        Phase::Float(v)
    }

    /// The angle as radians in `[0, 2π)`.
    pub fn to_radians(self) -> f64 {
        match self {
            Phase::Rational { num, den } => num as f64 * PI / den as f64,
            Phase::Float(v) => v,
        }
    }

    /// True when the stored form is an exact rational multiple of π.
    pub fn is_rational(self) -> bool {
        matches!(self, Phase::Rational { .. })
    }

    /// Multiplies the phase by an integer `k` modulo 2π; exact when rational.
    pub fn scale(self, k: i64) -> Phase {
        match self {
            Phase::Rational { num, den } => Self::rational_i128(num as i128 * k as i128, den as i128),
            Phase::Float(v) => Phase::radians(v * k as f64),
        }
    }

    /// Distance to `other` along the circle, in radians (≤ π).
    pub fn circle_distance(self, other: Phase) -> f64 {
        let d = (self.to_radians() - other.to_radians()).rem_euclid(TAU);
        d.min(TAU - d)
    }

    /// Equality as angles: exact for two rationals, and within `tol` radians
    /// of circle distance otherwise.
    pub fn congruent(self, other: Phase, tol: f64) -> bool {
        match (self, other) {
            (Phase::Rational { num: a, den: b }, Phase::Rational { num: c, den: d }) => {
                a == c && b == d
            }
            _ => self.circle_distance(other) <= tol,
        }
    }

    /// True when the phase is the zero angle within `tol`.
    pub fn is_zero(self, tol: f64) -> bool {
        self.congruent(Phase::ZERO, tol)
    }
}

/// Addition modulo 2π; exact when both phases are rational.
impl std::ops::Add for Phase {
    type Output = Phase;

    fn add(self, other: Phase) -> Phase {
        match (self, other) {
            (Phase::Rational { num: a, den: b }, Phase::Rational { num: c, den: d }) => {
                Self::rational_i128(
                    a as i128 * d as i128 + c as i128 * b as i128,
                    b as i128 * d as i128,
                )
            }
            _ => Phase::radians(self.to_radians() + other.to_radians()),
        }
    }
}

/// Negation modulo 2π; exact when rational.
impl std::ops::Neg for Phase {
    type Output = Phase;

    fn neg(self) -> Phase {
        match self {
            Phase::Rational { num, den } => Self::rational_i128(-(num as i128), den as i128),
            Phase::Float(v) => Phase::radians(-v),
        }
    }
}

fn gcd(a: u128, b: u128) -> u128 {
    let (mut a, mut b) = (a, b);
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a.max(1)
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Phase::Rational { num: 0, .. } => write!(f, "0"),
            Phase::Rational { num, den: 1 } => {
                if num == 1 {
                    write!(f, "pi")
                } else {
                    write!(f, "{num}pi")
                }
            }
            Phase::Rational { num, den } => {
                if num == 1 {
                    write!(f, "pi/{den}")
                } else {
                    write!(f, "{num}pi/{den}")
                }
            }
            Phase::Float(v) => write!(f, "{v:.9}"),
        }
    }
}

/// Wire format for phases: `{"pi_num": n, "pi_den": d}` denoting `(n/d)·π`,
/// or `{"float": radians}`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PhaseRepr {
    Rational { pi_num: i64, pi_den: i64 },
    Float { float: f64 },
}

impl From<Phase> for PhaseRepr {
    fn from(p: Phase) -> PhaseRepr {
        match p {
            Phase::Rational { num, den } => PhaseRepr::Rational {
                pi_num: num,
                pi_den: den,
            },
            Phase::Float(v) => PhaseRepr::Float { float: v },
        }
    }
}

impl TryFrom<PhaseRepr> for Phase {
    type Error = String;

    fn try_from(r: PhaseRepr) -> Result<Phase, String> {
        match r {
            PhaseRepr::Rational { pi_num, pi_den } => {
                if pi_den <= 0 {
                    Err(format!("phase denominator must be positive, got {pi_den}"))
                } else {
                    Ok(Phase::rational(pi_num, pi_den))
                }
            }
            PhaseRepr::Float { float } => {
                if float.is_finite() {
                    Ok(Phase::radians(float))
                } else {
                    Err("phase must be finite".into())
                }
            }
        }
    }
}
