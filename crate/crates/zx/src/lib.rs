//! A ZX-calculus engine: open graph diagrams over Z/X spiders, Hadamard
//! boxes, and boundaries, with matrix semantics, a rewrite-rule library whose
//! soundness is checked mechanically, Euler-angle conversions for single-qubit
//! unitaries, a machine-checkable certificate for a pair of equal-semantics
//! diagrams that a sound angle-multiplied interpretation separates (so no
//! rule system sound under those interpretations derives their equality),
//! and a search harness for more such pairs.

pub mod diagram;
pub mod euler;
pub mod incompleteness;
pub mod matrix;
pub mod phase;
pub mod rules;
pub mod search;
pub mod semantics;
pub mod soundness;

pub use diagram::{Diagram, DiagramError, Generator, NodeId, NodeKind};
pub use matrix::{compare, CompareMode, ComplexMatrix, Equivalence, MatrixError};
pub use phase::Phase;
pub use semantics::{generator_matrix, interpret, Model, SemanticsError};
