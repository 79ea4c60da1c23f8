//! Interpretation of diagrams as complex matrices.
//!
//! The standard interpretation assigns each generator its matrix and contracts
//! the diagram as a tensor network. The angle-multiplied interpretation with
//! parameter `k` multiplies every spider phase by the integer `k` before
//! evaluating; `k = 1` is the standard semantics.

use crate::diagram::{Diagram, Generator, NodeId, NodeKind};
use crate::matrix::{ComplexMatrix, MatrixError};
use crate::phase::Phase;
use num_complex::Complex64;
use std::collections::BTreeMap;
use thiserror::Error;

/// Default cap on wires per boundary side (matrix dimension `2^12`).
pub const DEFAULT_MAX_WIRES: usize = 12;

/// Cap on the degree of a single node's tensor.
const MAX_NODE_DEGREE: usize = 16;

/// The integer angle multiplier selecting an interpretation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Model {
    pub k: i64,
}

impl Model {
    /// The standard interpretation.
    pub const STANDARD: Model = Model { k: 1 };

    pub fn new(k: i64) -> Model {
        Model { k }
    }
}

#[derive(Debug, Error)]
pub enum SemanticsError {
    #[error("invalid diagram: {0}")]
    Invalid(String),
    #[error("too many {side} wires: {wires} exceeds the cap of {max}")]
    TooWide {
        side: &'static str,
        wires: usize,
        max: usize,
    },
    #[error("node degree {degree} exceeds the contraction cap of {max}")]
    NodeTooLarge { degree: usize, max: usize },
    #[error("arity violation: {0}")]
    Arity(String),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
}

fn czero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

fn cone() -> Complex64 {
    Complex64::new(1.0, 0.0)
}

/// `e^{i·k·phase}` for a spider under model `k`; exact phase arithmetic for
/// rational phases.
fn phase_factor(p: Phase, model: Model) -> Complex64 {
    Complex64::from_polar(1.0, p.scale(model.k).to_radians())
}

/// The 2×2 Hadamard matrix.
pub fn hadamard_matrix() -> ComplexMatrix {
    let s = 1.0 / 2.0_f64.sqrt();
    let mut h = ComplexMatrix::zeros(2, 2);
    h.set(0, 0, Complex64::new(s, 0.0));
    h.set(0, 1, Complex64::new(s, 0.0));
    h.set(1, 0, Complex64::new(s, 0.0));
    h.set(1, 1, Complex64::new(-s, 0.0));
    h
}

fn hadamard_power(n: usize) -> ComplexMatrix {
    let h = hadamard_matrix();
    let mut out = ComplexMatrix::identity(1);
    for _ in 0..n {
        out = out.kron(&h);
    }
    out
}

/// Z-spider matrix: `|0^m⟩ ↦ |0^n⟩`, `|1^m⟩ ↦ e^{ikα}|1^n⟩`, rest to zero.
fn z_spider_matrix(m: usize, n: usize, p: Phase, model: Model) -> ComplexMatrix {
    let rows = 1usize << n;
    let cols = 1usize << m;
    let mut out = ComplexMatrix::zeros(rows, cols);
    out.set(0, 0, out.at(0, 0) + cone());
    let e = phase_factor(p, model);
    out.set(rows - 1, cols - 1, out.at(rows - 1, cols - 1) + e);
    out
}

/// The matrix of a single generator with the given boundary arity.
///
/// Spiders take their phase times `model.k`; the wire, swap, cup, cap, and
/// Hadamard generators carry no phase and are model-independent. The X spider
/// is the Z spider conjugated by Hadamards on every leg, which pins its
/// `|±⟩`-basis behavior to the Z definition.
pub fn generator_matrix(
    g: Generator,
    m: usize,
    n: usize,
    model: Model,
) -> Result<ComplexMatrix, SemanticsError> {
    if m > DEFAULT_MAX_WIRES || n > DEFAULT_MAX_WIRES {
        return Err(SemanticsError::TooWide {
            side: if m > DEFAULT_MAX_WIRES { "input" } else { "output" },
            wires: m.max(n),
            max: DEFAULT_MAX_WIRES,
        });
    }
    let expect = |em: usize, en: usize, what: &str| {
        if (m, n) == (em, en) {
            Ok(())
        } else {
            Err(SemanticsError::Arity(format!(
                "{what} requires {em} inputs and {en} outputs, got {m} and {n}"
            )))
        }
    };
    match g {
        Generator::Wire => {
            expect(1, 1, "wire")?;
            Ok(ComplexMatrix::identity(2))
        }
        Generator::Swap => {
            expect(2, 2, "swap")?;
            let mut s = ComplexMatrix::zeros(4, 4);
            s.set(0, 0, cone());
            s.set(1, 2, cone());
            s.set(2, 1, cone());
            s.set(3, 3, cone());
            Ok(s)
        }
        Generator::Cup => {
            expect(2, 0, "cup")?;
            let mut c = ComplexMatrix::zeros(1, 4);
            c.set(0, 0, cone());
            c.set(0, 3, cone());
            Ok(c)
        }
        Generator::Cap => {
            expect(0, 2, "cap")?;
            let mut c = ComplexMatrix::zeros(4, 1);
            c.set(0, 0, cone());
            c.set(3, 0, cone());
            Ok(c)
        }
        Generator::Hadamard => {
            expect(1, 1, "hadamard")?;
            Ok(hadamard_matrix())
        }
        Generator::ZSpider(p) => Ok(z_spider_matrix(m, n, p, model)),
        Generator::XSpider(p) => {
            let z = z_spider_matrix(m, n, p, model);
            Ok(hadamard_power(n).mul(&z).mul(&hadamard_power(m)))
        }
    }
}

/// A dense tensor over 2-dimensional legs; `legs[0]` is the most significant
/// bit of the data index. Leg ids tie tensors to diagram edges.
#[derive(Clone, Debug)]
struct Tensor {
    legs: Vec<u32>,
    data: Vec<Complex64>,
}

impl Tensor {
    fn scalar(v: Complex64) -> Tensor {
        Tensor {
            legs: Vec::new(),
            data: vec![v],
        }
    }

    fn rank(&self) -> usize {
        self.legs.len()
    }

    /// Z-spider tensor: all-zeros index gets +1, all-ones gets +factor.
    fn z_spider(legs: Vec<u32>, factor: Complex64) -> Tensor {
        let r = legs.len();
        let mut data = vec![czero(); 1 << r];
        data[0] += cone();
        let last = (1usize << r) - 1;
        data[last] += factor;
        Tensor { legs, data }
    }

    /// Applies the Hadamard matrix along one leg position.
    fn apply_hadamard(&mut self, pos: usize) {
        let r = self.rank();
        let stride = 1usize << (r - 1 - pos);
        let s = 1.0 / 2.0_f64.sqrt();
        let mut i = 0;
        while i < self.data.len() {
            if i & stride == 0 {
                let a = self.data[i];
                let b = self.data[i | stride];
                self.data[i] = (a + b) * s;
                self.data[i | stride] = (a - b) * s;
            }
            i += 1;
        }
    }

    /// X-spider tensor: the Z tensor conjugated by Hadamard on every leg.
    fn x_spider(legs: Vec<u32>, factor: Complex64) -> Tensor {
        let mut t = Tensor::z_spider(legs, factor);
        for pos in 0..t.rank() {
            t.apply_hadamard(pos);
        }
        t
    }

    fn hadamard(legs: Vec<u32>) -> Tensor {
        debug_assert_eq!(legs.len(), 2);
        let s = 1.0 / 2.0_f64.sqrt();
        Tensor {
            legs,
            data: vec![
                Complex64::new(s, 0.0),
                Complex64::new(s, 0.0),
                Complex64::new(s, 0.0),
                Complex64::new(-s, 0.0),
            ],
        }
    }

    /// Identity wire between two legs.
    fn wire(a: u32, b: u32) -> Tensor {
        Tensor {
            legs: vec![a, b],
            data: vec![cone(), czero(), czero(), cone()],
        }
    }

    /// Contracts every leg id appearing twice within this tensor (self-loops).
    fn trace_duplicates(mut self) -> Tensor {
        loop {
            let mut dup = None;
            'outer: for i in 0..self.legs.len() {
                for j in (i + 1)..self.legs.len() {
                    if self.legs[i] == self.legs[j] {
                        dup = Some((i, j));
                        break 'outer;
                    }
                }
            }
            let Some((i, j)) = dup else { return self };
            let r = self.rank();
            let out_legs: Vec<u32> = self
                .legs
                .iter()
                .enumerate()
                .filter(|(p, _)| *p != i && *p != j)
                .map(|(_, l)| *l)
                .collect();
            let ro = out_legs.len();
            let mut out = vec![czero(); 1 << ro];
            for (idx, v) in self.data.iter().enumerate() {
                let bi = (idx >> (r - 1 - i)) & 1;
                let bj = (idx >> (r - 1 - j)) & 1;
                if bi != bj {
                    continue;
                }
                let mut oidx = 0usize;
                for p in 0..r {
                    if p == i || p == j {
                        continue;
                    }
                    oidx = (oidx << 1) | ((idx >> (r - 1 - p)) & 1);
                }
                out[oidx] += v;
            }
            self = Tensor {
                legs: out_legs,
                data: out,
            };
        }
    }

    /// Contracts two tensors over all shared legs (outer product when none).
    fn contract(a: &Tensor, b: &Tensor) -> Tensor {
        let shared: Vec<u32> = a
            .legs
            .iter()
            .copied()
            .filter(|l| b.legs.contains(l))
            .collect();
        let afree: Vec<u32> = a
            .legs
            .iter()
            .copied()
            .filter(|l| !shared.contains(l))
            .collect();
        let bfree: Vec<u32> = b
            .legs
            .iter()
            .copied()
            .filter(|l| !shared.contains(l))
            .collect();
        let out_legs: Vec<u32> = afree.iter().chain(bfree.iter()).copied().collect();
        let (ra, rb, ro, ns) = (a.rank(), b.rank(), out_legs.len(), shared.len());
        let bit_of = |legs: &[u32], rank: usize, idx: usize, leg: u32| -> Option<usize> {
            legs.iter()
                .position(|l| *l == leg)
                .map(|p| (idx >> (rank - 1 - p)) & 1)
        };
        let mut out = vec![czero(); 1 << ro];
        for (oidx, slot) in out.iter_mut().enumerate() {
            let mut acc = czero();
            for sidx in 0..(1usize << ns) {
                let assemble = |legs: &[u32]| -> usize {
                    legs.iter().fold(0usize, |acc, &l| {
                        let bit = bit_of(&out_legs, ro, oidx, l)
                            .or_else(|| bit_of(&shared, ns, sidx, l))
                            .expect("every leg is free or shared");
                        (acc << 1) | bit
                    })
                };
                let ia = assemble(&a.legs);
                let ib = assemble(&b.legs);
                let _ = (ra, rb);
                acc += a.data[ia] * b.data[ib];
            }
            *slot = acc;
        }
        Tensor {
            legs: out_legs,
            data: out,
        }
    }

    /// Reorders legs into the target order (a permutation of the current).
    fn permuted(&self, target: &[u32]) -> Tensor {
        debug_assert_eq!(self.legs.len(), target.len());
        let r = self.rank();
        let mut out = vec![czero(); self.data.len()];
        // Position of each target leg in the current order.
        let src_pos: Vec<usize> = target
            .iter()
            .map(|l| self.legs.iter().position(|x| x == l).expect("leg present"))
            .collect();
        for (tidx, slot) in out.iter_mut().enumerate() {
            let mut sidx = 0usize;
            for (p, &src) in src_pos.iter().enumerate() {
                let bit = (tidx >> (r - 1 - p)) & 1;
                sidx |= bit << (r - 1 - src);
            }
            *slot = self.data[sidx];
        }
        Tensor {
            legs: target.to_vec(),
            data: out,
        }
    }
}

/// Returns a copy of the diagram with every spider phase multiplied by `k`.
///
/// Evaluating the copy standardly equals evaluating the original under model
/// `k` (definitionally; exact for rational phases).
pub fn scale_phases(d: &Diagram, k: i64) -> Diagram {
    let mut out = d.clone();
    let ids: Vec<NodeId> = out.nodes().map(|(id, _)| id).collect();
    for id in ids {
        match out.kind(id) {
            Some(NodeKind::Z(p)) => out.set_kind(id, NodeKind::Z(p.scale(k))),
            Some(NodeKind::X(p)) => out.set_kind(id, NodeKind::X(p.scale(k))),
            _ => {}
        }
    }
    out
}

/// Evaluates a diagram to its matrix under the given model, with the default
/// cap of 12 wires per side.
pub fn interpret(d: &Diagram, model: Model) -> Result<ComplexMatrix, SemanticsError> {
    interpret_capped(d, model, DEFAULT_MAX_WIRES)
}

/// Evaluates a diagram to its matrix under the given model.
///
/// Each internal node becomes a tensor (spiders of degree d as rank-d
/// tensors), internal edges are contracted, and boundary edges remain free,
/// ordered by the output then input lists. Self-loops contract as traces;
/// parallel edges are independent bonds. The result has `2^{outputs}` rows
/// and `2^{inputs}` columns with the leftmost wire as the most significant
/// bit.
pub fn interpret_capped(
    d: &Diagram,
    model: Model,
    max_wires: usize,
) -> Result<ComplexMatrix, SemanticsError> {
    let violations = d.validate();
    if !violations.is_empty() {
        return Err(SemanticsError::Invalid(violations.join("; ")));
    }
    let m = d.inputs().len();
    let n = d.outputs().len();
    if m > max_wires {
        return Err(SemanticsError::TooWide {
            side: "input",
            wires: m,
            max: max_wires,
        });
    }
    if n > max_wires {
        return Err(SemanticsError::TooWide {
            side: "output",
            wires: n,
            max: max_wires,
        });
    }

    let is_boundary = |id: NodeId| matches!(d.kind(id), Some(NodeKind::B));
    let mut next_leg = d.edges().len() as u32;
    let mut boundary_leg: BTreeMap<NodeId, u32> = BTreeMap::new();
    let mut tensors: Vec<Tensor> = Vec::new();

    for (idx, &(a, b)) in d.edges().iter().enumerate() {
        let leg = idx as u32;
        match (is_boundary(a), is_boundary(b)) {
            (true, true) => {
                // A bare wire between two boundaries: split the edge id so each
                // end owns a distinct free leg, tied by an explicit identity.
                let fresh = next_leg;
                next_leg += 1;
                boundary_leg.insert(a, leg);
                boundary_leg.insert(b, fresh);
                tensors.push(Tensor::wire(leg, fresh));
            }
            (true, false) => {
                boundary_leg.insert(a, leg);
            }
            (false, true) => {
                boundary_leg.insert(b, leg);
            }
            (false, false) => {}
        }
    }

    for (id, kind) in d.nodes() {
        if kind.is_boundary() {
            continue;
        }
        let mut legs: Vec<u32> = Vec::new();
        for (idx, &(a, b)) in d.edges().iter().enumerate() {
            if a == id {
                legs.push(idx as u32);
            }
            if b == id {
                legs.push(idx as u32);
            }
        }
        if legs.len() > MAX_NODE_DEGREE {
            return Err(SemanticsError::NodeTooLarge {
                degree: legs.len(),
                max: MAX_NODE_DEGREE,
            });
        }
        let t = match kind {
            NodeKind::Z(p) => Tensor::z_spider(legs, phase_factor(p, model)),
            NodeKind::X(p) => Tensor::x_spider(legs, phase_factor(p, model)),
            NodeKind::H => Tensor::hadamard(legs),
            NodeKind::B => unreachable!(),
        };
        tensors.push(t.trace_duplicates());
    }

    // Greedy contraction: repeatedly take the lowest-rank tensor that still
    // shares a leg with some partner, pairing it to minimize the result rank.
    loop {
        let mut best: Option<(usize, usize, usize)> = None;
        let mut order: Vec<usize> = (0..tensors.len()).collect();
        order.sort_by_key(|&i| tensors[i].rank());
        'search: for &i in &order {
            for j in 0..tensors.len() {
                if i == j {
                    continue;
                }
                let shared = tensors[i]
                    .legs
                    .iter()
                    .filter(|l| tensors[j].legs.contains(l))
                    .count();
                if shared == 0 {
                    continue;
                }
                let result_rank = tensors[i].rank() + tensors[j].rank() - 2 * shared;
                if best.map(|(_, _, r)| result_rank < r).unwrap_or(true) {
                    best = Some((i, j, result_rank));
                }
            }
            if best.is_some() {
                break 'search;
            }
        }
        let Some((i, j, _)) = best else { break };
        let (lo, hi) = (i.min(j), i.max(j));
        let tb = tensors.swap_remove(hi);
        let ta = tensors.swap_remove(lo);
        tensors.push(Tensor::contract(&ta, &tb));
    }

    // What remains is a disconnected product of free-leg tensors and scalars.
    let mut total = Tensor::scalar(cone());
    for t in tensors {
        total = Tensor::contract(&total, &t);
    }

    let target: Vec<u32> = d
        .outputs()
        .iter()
        .chain(d.inputs().iter())
        .map(|b| *boundary_leg.get(b).expect("boundary has exactly one edge"))
        .collect();
    let total = total.permuted(&target);
    Ok(ComplexMatrix::from_vec(1 << n, 1 << m, total.data)?)
}
