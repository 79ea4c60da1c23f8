//! Dense complex matrices over power-of-two dimensions, plus the three
//! equivalence comparisons used throughout: exact, up to a global phase, and
//! up to a nonzero complex scalar.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

/// A dense `rows × cols` complex matrix, row-major.
///
/// Row indices enumerate output basis states and column indices input basis
/// states; the leftmost wire of a diagram is the most significant bit. Both
/// dimensions are powers of two (`1 × 1` scalars included).
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

#[derive(Debug, Error)]
pub enum MatrixError {
    #[error("matrix dimensions must be powers of two, got {rows}x{cols}")]
    BadShape { rows: usize, cols: usize },
    #[error("matrix entries must be finite")]
    NonFinite,
    #[error("matrix document has {got} entries, expected {expected}")]
    EntryCount { got: usize, expected: usize },
}

impl ComplexMatrix {
    /// All-zero matrix of the given shape; dimensions must be powers of two.
    pub fn zeros(rows: usize, cols: usize) -> ComplexMatrix {
        assert!(
            rows.is_power_of_two() && cols.is_power_of_two(),
            "dimensions must be powers of two, got {rows}x{cols}"
        );
        ComplexMatrix {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    /// The `n × n` identity.
    pub fn identity(n: usize) -> ComplexMatrix {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = Complex64::new(1.0, 0.0);
        }
        m
    }

    /// Builds from a row-major entry list; length must equal `rows · cols`.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<ComplexMatrix, MatrixError> {
        if !rows.is_power_of_two() || !cols.is_power_of_two() {
            return Err(MatrixError::BadShape { rows, cols });
        }
        if data.len() != rows * cols {
            return Err(MatrixError::EntryCount {
                got: data.len(),
                expected: rows * cols,
            });
        }
        if data.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(MatrixError::NonFinite);
        }
        Ok(ComplexMatrix { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn at(&self, r: usize, c: usize) -> Complex64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: Complex64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.data
    }

    /// Matrix product `self · rhs`.
    pub fn mul(&self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.cols, rhs.rows, "inner dimensions must agree");
        let mut out = ComplexMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..rhs.cols {
                    out.data[i * rhs.cols + j] += a * rhs.data[k * rhs.cols + j];
                }
            }
        }
        out
    }

    /// Kronecker product `self ⊗ rhs` (self supplies the most significant bits).
    pub fn kron(&self, rhs: &ComplexMatrix) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.rows * rhs.rows, self.cols * rhs.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self.data[i * self.cols + j];
                for p in 0..rhs.rows {
                    for q in 0..rhs.cols {
                        out.data[(i * rhs.rows + p) * out.cols + (j * rhs.cols + q)] =
                            a * rhs.data[p * rhs.cols + q];
                    }
                }
            }
        }
        out
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.data[i * self.cols + j].conj();
            }
        }
        out
    }

    /// Entrywise scaling.
    pub fn scale(&self, s: Complex64) -> ComplexMatrix {
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|c| c * s).collect(),
        }
    }

    /// Frobenius norm.
    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Frobenius norm of `self − rhs`; shapes must agree.
    pub fn distance(&self, rhs: &ComplexMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        self.data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Frobenius inner product `⟨self, rhs⟩ = Σ conj(self)·rhs`.
    pub fn inner(&self, rhs: &ComplexMatrix) -> Complex64 {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        self.data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }
}

impl fmt::Display for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in 0..self.rows {
            for c in 0..self.cols {
                let v = self.at(r, c);
                if c > 0 {
                    write!(f, "  ")?;
                }
                write!(f, "{:+.6}{:+.6}i", v.re, v.im)?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Wire format: shape header plus a row-major list of `[re, im]` pairs.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MatrixDoc {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<[f64; 2]>,
}

impl From<&ComplexMatrix> for MatrixDoc {
    fn from(m: &ComplexMatrix) -> MatrixDoc {
        MatrixDoc {
            rows: m.rows,
            cols: m.cols,
            entries: m.data.iter().map(|c| [c.re, c.im]).collect(),
        }
    }
}

impl TryFrom<MatrixDoc> for ComplexMatrix {
    type Error = MatrixError;

    fn try_from(d: MatrixDoc) -> Result<ComplexMatrix, MatrixError> {
        let data = d.entries.iter().map(|[re, im]| Complex64::new(*re, *im)).collect();
        ComplexMatrix::from_vec(d.rows, d.cols, data)
    }
}

/// Comparison mode, ordered from tightest to loosest: every exact pair is
/// phase-equal, and every phase-equal pair is scalar-equal.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CompareMode {
    Exact,
    UpToGlobalPhase,
    UpToNonzeroScalar,
}

impl fmt::Display for CompareMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CompareMode::Exact => "exact",
            CompareMode::UpToGlobalPhase => "phase",
            CompareMode::UpToNonzeroScalar => "scalar",
        };
        f.write_str(s)
    }
}

/// Outcome of a comparison: whether the pair passed in the requested mode,
/// the residual after the mode's best alignment, and the alignment witness
/// (1 for exact, `e^{iφ}` for phase, `λ` for scalar).
#[derive(Clone, Copy, Debug)]
pub struct Equivalence {
    pub equivalent: bool,
    pub mode: CompareMode,
    pub residual: f64,
    pub witness: Complex64,
}

/// Entry magnitudes below this count as zero when picking witnesses.
const WITNESS_EPS: f64 = 1e-12;

/// Compares `a` against `b` in the given mode.
///
/// Residuals are Frobenius norms after the best alignment the mode allows;
/// the pass threshold is `tol · max(1, ‖b‖_F)`. A shape mismatch is a
/// negative result, not an error; non-finite entries are an error.
pub fn compare(
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    mode: CompareMode,
    tol: f64,
) -> Result<Equivalence, MatrixError> {
    if !a.is_finite() || !b.is_finite() {
        return Err(MatrixError::NonFinite);
    }
    if (a.rows(), a.cols()) != (b.rows(), b.cols()) {
        return Ok(Equivalence {
            equivalent: false,
            mode,
            residual: f64::INFINITY,
            witness: Complex64::new(0.0, 0.0),
        });
    }
    let scale = b.frobenius_norm().max(1.0);
    let one = Complex64::new(1.0, 0.0);
    let out = match mode {
        CompareMode::Exact => {
            let residual = a.distance(b);
            Equivalence {
                equivalent: residual <= tol * scale,
                mode,
                residual,
                witness: one,
            }
        }
        CompareMode::UpToGlobalPhase => {
            let ip = b.inner(a);
            if ip.norm() <= WITNESS_EPS {
                // No phase preference (orthogonal or zero); any phase gives the
                // same residual, so report it for witness 1.
                let residual = a.distance(b);
                Equivalence {
                    equivalent: residual <= tol * scale,
                    mode,
                    residual,
                    witness: one,
                }
            } else {
                let w = ip / ip.norm();
                let residual = a.distance(&b.scale(w));
                Equivalence {
                    equivalent: residual <= tol * scale,
                    mode,
                    residual,
                    witness: w,
                }
            }
        }
        CompareMode::UpToNonzeroScalar => {
            let bb = b.inner(b).re;
            if bb <= WITNESS_EPS * WITNESS_EPS {
                // b is (numerically) zero: only the zero matrix matches it.
                let residual = a.frobenius_norm();
                Equivalence {
                    equivalent: residual <= tol * scale,
                    mode,
                    residual,
                    witness: one,
                }
            } else {
                let lam = b.inner(a) / bb;
                let residual = a.distance(&b.scale(lam));
                // A zero least-squares scalar means a ⟂ b: no nonzero λ works.
                let equivalent = lam.norm() > WITNESS_EPS && residual <= tol * scale;
                Equivalence {
                    equivalent,
                    mode,
                    residual,
                    witness: lam,
                }
            }
        }
    };
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn hadamard() -> ComplexMatrix {
        let s = 1.0 / 2.0_f64.sqrt();
        ComplexMatrix::from_vec(2, 2, vec![c(s, 0.0), c(s, 0.0), c(s, 0.0), c(-s, 0.0)]).unwrap()
    }

    #[test]
    fn exact_self_comparison() {
        let m = hadamard();
        let r = compare(&m, &m, CompareMode::Exact, 1e-9).unwrap();
        assert!(r.equivalent);
        assert_eq!(r.witness, c(1.0, 0.0));
        assert_eq!(r.residual, 0.0);
    }

    #[test]
    fn phase_witness_recovers_relation() {
        // a = e^{iπ/3}·b  ⇒  compare(b·e^{iπ/3}, b) has witness e^{iπ/3}; going
        // the other way the witness negates.
        let b = hadamard();
        let ph = Complex64::from_polar(1.0, PI / 3.0);
        let a = b.scale(ph);
        let r = compare(&a, &b, CompareMode::UpToGlobalPhase, 1e-9).unwrap();
        assert!(r.equivalent);
        assert!((r.witness - ph).norm() < 1e-12);
        let back = compare(&b, &a, CompareMode::UpToGlobalPhase, 1e-9).unwrap();
        assert!(back.equivalent);
        assert!((back.witness - ph.conj()).norm() < 1e-12);
    }

    #[test]
    fn phase_unequal_pair_has_large_residual() {
        // I vs diag(1, e^{iπ/4}): best-phase residual 0.551798758565886,
        // above the sqrt(2 - 2cos(π/8)) = 0.390181 floor.
        let a = ComplexMatrix::identity(2);
        let mut b = ComplexMatrix::identity(2);
        b.set(1, 1, Complex64::from_polar(1.0, PI / 4.0));
        let r = compare(&a, &b, CompareMode::UpToGlobalPhase, 1e-9).unwrap();
        assert!(!r.equivalent);
        assert!((r.residual - 0.551_798_758_565_886).abs() < 1e-12);
        assert!(r.residual >= (2.0 - 2.0 * (PI / 8.0).cos()).sqrt());
        let s = compare(&a, &b, CompareMode::UpToNonzeroScalar, 1e-9).unwrap();
        assert!(!s.equivalent);
        assert!((s.residual - 0.541_196_100_146_197).abs() < 1e-12);
    }

    #[test]
    fn scalar_mode_accepts_rescaling_and_rejects_orthogonal() {
        let b = hadamard();
        let a = b.scale(c(0.0, -2.5));
        let r = compare(&a, &b, CompareMode::UpToNonzeroScalar, 1e-9).unwrap();
        assert!(r.equivalent);
        assert!((r.witness - c(0.0, -2.5)).norm() < 1e-12);
        // Orthogonal matrices give λ* = 0, which scalar mode must reject.
        let x = ComplexMatrix::from_vec(2, 2, vec![c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)])
            .unwrap();
        let z = ComplexMatrix::from_vec(2, 2, vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)])
            .unwrap();
        let r = compare(&x, &z, CompareMode::UpToNonzeroScalar, 1e-9).unwrap();
        assert!(!r.equivalent);
    }

    #[test]
    fn mode_nesting() {
        // Anything passing a tighter mode passes the looser ones.
        let b = hadamard();
        for a in [b.clone(), b.scale(Complex64::from_polar(1.0, 0.7))] {
            let exact = compare(&a, &b, CompareMode::Exact, 1e-9).unwrap().equivalent;
            let phase = compare(&a, &b, CompareMode::UpToGlobalPhase, 1e-9).unwrap().equivalent;
            let scalar = compare(&a, &b, CompareMode::UpToNonzeroScalar, 1e-9).unwrap().equivalent;
            if exact {
                assert!(phase);
            }
            if phase {
                assert!(scalar);
            }
        }
    }

    #[test]
    fn shape_mismatch_is_negative_not_error() {
        let a = ComplexMatrix::identity(2);
        let b = ComplexMatrix::identity(4);
        let r = compare(&a, &b, CompareMode::Exact, 1e-9).unwrap();
        assert!(!r.equivalent);
    }

    #[test]
    fn nan_input_is_an_error() {
        let a = ComplexMatrix::identity(2);
        let mut b = ComplexMatrix::identity(2);
        b.set(0, 0, c(f64::NAN, 0.0));
        assert!(compare(&a, &b, CompareMode::Exact, 1e-9).is_err());
    }

    #[test]
    fn kron_and_mul_agree_with_hand_values() {
        let h = hadamard();
        let hh = h.mul(&h);
        assert!(hh.distance(&ComplexMatrix::identity(2)) < 1e-15);
        let k = h.kron(&ComplexMatrix::identity(2));
        assert_eq!((k.rows(), k.cols()), (4, 4));
        assert!((k.at(0, 0) - c(1.0 / 2.0_f64.sqrt(), 0.0)).norm() < 1e-15);
        assert_eq!(k.at(0, 1), c(0.0, 0.0));
    }

    #[test]
    fn doc_round_trip() {
        let m = hadamard();
        let doc = MatrixDoc::from(&m);
        let text = serde_json::to_string(&doc).unwrap();
        let back: MatrixDoc = serde_json::from_str(&text).unwrap();
        let m2 = ComplexMatrix::try_from(back).unwrap();
        assert!(m.distance(&m2) == 0.0);
    }

    #[test]
    fn doc_rejects_bad_shapes() {
        let doc = MatrixDoc {
            rows: 3,
            cols: 2,
            entries: vec![[0.0, 0.0]; 6],
        };
        assert!(ComplexMatrix::try_from(doc).is_err());
    }
}
