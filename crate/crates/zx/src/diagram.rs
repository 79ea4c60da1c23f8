//! Open graphs of spiders, Hadamard boxes, and boundary nodes.
//!
//! A diagram is a multigraph (self-loops and parallel edges are legal syntax)
//! together with ordered lists of input and output boundary nodes. Only the
//! topology matters internally; the boundary order is what makes the diagram
//! denote a linear map rather than a bare tensor.

use crate::phase::{Phase, PhaseRepr, PHASE_CROSS_TOL};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

pub type NodeId = u32;

/// Node payloads: green/red spiders with a phase, degree-2 Hadamard boxes,
/// and degree-1 boundary markers.
#[derive(Clone, Copy, Debug)]
pub enum NodeKind {
    Z(Phase),
    X(Phase),
    H,
    B,
}

impl NodeKind {
    pub fn is_spider(&self) -> bool {
        matches!(self, NodeKind::Z(_) | NodeKind::X(_))
    }

    pub fn is_boundary(&self) -> bool {
        matches!(self, NodeKind::B)
    }

    pub fn phase(&self) -> Option<Phase> {
        match self {
            NodeKind::Z(p) | NodeKind::X(p) => Some(*p),
            _ => None,
        }
    }

    /// Same constructor and, for spiders, congruent phase.
    pub fn congruent(&self, other: &NodeKind, tol: f64) -> bool {
        match (self, other) {
            (NodeKind::Z(a), NodeKind::Z(b)) | (NodeKind::X(a), NodeKind::X(b)) => {
                a.congruent(*b, tol)
            }
            (NodeKind::H, NodeKind::H) | (NodeKind::B, NodeKind::B) => true,
            _ => false,
        }
    }
}

/// The seven generators diagrams are built from.
#[derive(Clone, Copy, Debug)]
pub enum Generator {
    /// Identity wire, 1 → 1.
    Wire,
    /// Wire crossing, 2 → 2.
    Swap,
    /// Bent wire consuming two inputs, 2 → 0.
    Cup,
    /// Bent wire producing two outputs, 0 → 2.
    Cap,
    /// Hadamard box, 1 → 1.
    Hadamard,
    /// Green spider with a phase, any arity.
    ZSpider(Phase),
    /// Red spider with a phase, any arity.
    XSpider(Phase),
}

#[derive(Debug, Error)]
pub enum DiagramError {
    #[error("arity violation: {0}")]
    Arity(String),
    #[error("composition mismatch: bottom has {bottom} outputs, top has {top} inputs")]
    ComposeArity { bottom: usize, top: usize },
    #[error("unknown node id {0}")]
    UnknownNode(NodeId),
    #[error("invalid diagram: {0}")]
    Invalid(String),
    #[error("malformed diagram document: {0}")]
    Document(String),
}

/// An open graph with ordered boundaries.
#[derive(Clone, Debug, Default)]
pub struct Diagram {
    nodes: BTreeMap<NodeId, NodeKind>,
    edges: Vec<(NodeId, NodeId)>,
    inputs: Vec<NodeId>,
    outputs: Vec<NodeId>,
    next_id: NodeId,
}

impl Diagram {
    pub fn new() -> Diagram {
        Diagram::default()
    }

    /// Adds a node and returns its fresh id.
    pub fn add_node(&mut self, kind: NodeKind) -> NodeId {
        let id = self.next_id;
        self.next_id += 1;
        self.nodes.insert(id, kind);
        id
    }

    /// Adds an edge between existing nodes; `a == b` makes a self-loop.
    pub fn add_edge(&mut self, a: NodeId, b: NodeId) {
        assert!(self.nodes.contains_key(&a), "unknown node {a}");
        assert!(self.nodes.contains_key(&b), "unknown node {b}");
        self.edges.push(if a <= b { (a, b) } else { (b, a) });
    }

    /// Appends a boundary node to the input list.
    pub fn mark_input(&mut self, id: NodeId) {
        self.inputs.push(id);
    }

    /// Appends a boundary node to the output list.
    pub fn mark_output(&mut self, id: NodeId) {
        self.outputs.push(id);
    }

    pub fn kind(&self, id: NodeId) -> Option<NodeKind> {
        self.nodes.get(&id).copied()
    }

    pub fn set_kind(&mut self, id: NodeId, kind: NodeKind) {
        if let Some(slot) = self.nodes.get_mut(&id) {
            *slot = kind;
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = (NodeId, NodeKind)> + '_ {
        self.nodes.iter().map(|(id, k)| (*id, *k))
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edges(&self) -> &[(NodeId, NodeId)] {
        &self.edges
    }

    pub fn inputs(&self) -> &[NodeId] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[NodeId] {
        &self.outputs
    }

    /// Degree of a node; a self-loop contributes 2.
    pub fn degree(&self, id: NodeId) -> usize {
        self.edges
            .iter()
            .map(|&(a, b)| (a == id) as usize + (b == id) as usize)
            .sum()
    }

    /// Indices into `edges()` of all edges touching `id` (self-loops once).
    pub fn incident_edges(&self, id: NodeId) -> Vec<usize> {
        self.edges
            .iter()
            .enumerate()
            .filter(|(_, &(a, b))| a == id || b == id)
            .map(|(i, _)| i)
            .collect()
    }

    /// Removes a node together with every incident edge.
    pub fn remove_node(&mut self, id: NodeId) {
        self.nodes.remove(&id);
        self.edges.retain(|&(a, b)| a != id && b != id);
        self.inputs.retain(|&b| b != id);
        self.outputs.retain(|&b| b != id);
    }

    /// Rewrites one endpoint of an edge in place.
    pub(crate) fn replace_endpoint(&mut self, edge_idx: usize, end: u8, new_node: NodeId) {
        let (a, b) = self.edges[edge_idx];
        let (a, b) = if end == 0 { (new_node, b) } else { (a, new_node) };
        self.edges[edge_idx] = if a <= b { (a, b) } else { (b, a) };
    }

    /// Removes a degree-2 wire-like node, rejoining its two edge slots.
    ///
    /// A node whose two slots form one self-loop is a closed circle; it is
    /// kept as a phase-0 green spider carrying the loop (a scalar-2 island).
    /// Requires the node to have exactly two edge slots.
    pub(crate) fn eliminate_wire_node(&mut self, id: NodeId) {
        let incident = self.incident_edges(id);
        if incident.len() == 1 {
            // Both slots on one edge: a self-loop; keep as circle.
            debug_assert_eq!(self.edges[incident[0]], (id, id));
            self.set_kind(id, NodeKind::Z(Phase::ZERO));
            return;
        }
        debug_assert_eq!(incident.len(), 2, "wire node must have two slots");
        let (i, j) = (incident[0], incident[1]);
        let other = |e: (NodeId, NodeId)| if e.0 == id { e.1 } else { e.0 };
        let x = other(self.edges[i]);
        let y = other(self.edges[j]);
        // Remove the higher index first so the lower stays valid.
        self.edges.remove(j.max(i));
        self.edges.remove(j.min(i));
        self.nodes.remove(&id);
        self.edges.push(if x <= y { (x, y) } else { (y, x) });
    }

    /// Builds one of the seven generators with the requested boundary arity.
    ///
    /// Fixed-arity generators reject other arities: wire and Hadamard are
    /// 1 → 1, swap 2 → 2, cup 2 → 0, cap 0 → 2. Spiders accept any `m, n ≥ 0`.
    /// Boundaries are created in left-to-right order.
    pub fn generator(g: Generator, m: usize, n: usize) -> Result<Diagram, DiagramError> {
        let mut d = Diagram::new();
        let expect = |em: usize, en: usize, what: &str| {
            if (m, n) == (em, en) {
                Ok(())
            } else {
                Err(DiagramError::Arity(format!(
                    "{what} requires {em} inputs and {en} outputs, got {m} and {n}"
                )))
            }
        };
        match g {
            Generator::Wire => {
                expect(1, 1, "wire")?;
                let i = d.add_node(NodeKind::B);
                let o = d.add_node(NodeKind::B);
                d.add_edge(i, o);
                d.mark_input(i);
                d.mark_output(o);
            }
            Generator::Swap => {
                expect(2, 2, "swap")?;
                let i0 = d.add_node(NodeKind::B);
                let i1 = d.add_node(NodeKind::B);
                let o0 = d.add_node(NodeKind::B);
                let o1 = d.add_node(NodeKind::B);
                d.add_edge(i0, o1);
                d.add_edge(i1, o0);
                d.mark_input(i0);
                d.mark_input(i1);
                d.mark_output(o0);
                d.mark_output(o1);
            }
            Generator::Cup => {
                expect(2, 0, "cup")?;
                let i0 = d.add_node(NodeKind::B);
                let i1 = d.add_node(NodeKind::B);
                d.add_edge(i0, i1);
                d.mark_input(i0);
                d.mark_input(i1);
            }
            Generator::Cap => {
                expect(0, 2, "cap")?;
                let o0 = d.add_node(NodeKind::B);
                let o1 = d.add_node(NodeKind::B);
                d.add_edge(o0, o1);
                d.mark_output(o0);
                d.mark_output(o1);
            }
            Generator::Hadamard => {
                expect(1, 1, "hadamard")?;
                let i = d.add_node(NodeKind::B);
                let h = d.add_node(NodeKind::H);
                let o = d.add_node(NodeKind::B);
                d.add_edge(i, h);
                d.add_edge(h, o);
                d.mark_input(i);
                d.mark_output(o);
            }
            Generator::ZSpider(p) | Generator::XSpider(p) => {
                let kind = if matches!(g, Generator::ZSpider(_)) {
                    NodeKind::Z(p)
                } else {
                    NodeKind::X(p)
                };
                let s = d.add_node(kind);
                for _ in 0..m {
                    let b = d.add_node(NodeKind::B);
                    d.add_edge(b, s);
                    d.mark_input(b);
                }
                for _ in 0..n {
                    let b = d.add_node(NodeKind::B);
                    d.add_edge(s, b);
                    d.mark_output(b);
                }
            }
        }
        debug_assert!(d.validate().is_empty());
        Ok(d)
    }

    /// Copies `other` into `self` with fresh ids; returns the id translation.
    fn absorb(&mut self, other: &Diagram) -> BTreeMap<NodeId, NodeId> {
        let mut map = BTreeMap::new();
        for (id, kind) in other.nodes() {
            map.insert(id, self.add_node(kind));
        }
        for &(a, b) in other.edges() {
            self.add_edge(map[&a], map[&b]);
        }
        map
    }

    /// Side-by-side composition: disjoint union with concatenated boundaries.
    pub fn tensor(a: &Diagram, b: &Diagram) -> Diagram {
        let mut d = Diagram::new();
        let ma = d.absorb(a);
        let mb = d.absorb(b);
        d.inputs = a.inputs.iter().map(|i| ma[i]).chain(b.inputs.iter().map(|i| mb[i])).collect();
        d.outputs = a.outputs.iter().map(|o| ma[o]).chain(b.outputs.iter().map(|o| mb[o])).collect();
        d
    }

    /// Sequential composition: plugs `bottom`'s outputs into `top`'s inputs.
    ///
    /// The i-th output boundary of `bottom` is fused with the i-th input
    /// boundary of `top`: both boundary nodes disappear and their neighbors
    /// are joined. Chains of fused wires collapse; a wire loop closed by the
    /// fusion survives as a circle (see `eliminate_wire_node`). The result
    /// keeps `bottom`'s inputs and `top`'s outputs, and denotes
    /// `matrix(top) · matrix(bottom)`.
    pub fn compose(top: &Diagram, bottom: &Diagram) -> Result<Diagram, DiagramError> {
        if bottom.outputs.len() != top.inputs.len() {
            return Err(DiagramError::ComposeArity {
                bottom: bottom.outputs.len(),
                top: top.inputs.len(),
            });
        }
        let mut d = Diagram::new();
        let mb = d.absorb(bottom);
        let mt = d.absorb(top);
        d.inputs = bottom.inputs.iter().map(|i| mb[i]).collect();
        d.outputs = top.outputs.iter().map(|o| mt[o]).collect();
        // Fuse each boundary pair into a temporary wire node, then eliminate.
        let mut connectors = Vec::new();
        for (bo, ti) in bottom.outputs.iter().zip(&top.inputs) {
            let (bo, ti) = (mb[bo], mt[ti]);
            let c = d.add_node(NodeKind::Z(Phase::ZERO));
            for idx in d.incident_edges(bo) {
                let (a, b) = d.edges[idx];
                let end = if a == bo { 0 } else { 1 };
                debug_assert!(if end == 0 { b != bo } else { a != bo }, "boundary self-loop");
                d.replace_endpoint(idx, end, c);
            }
            for idx in d.incident_edges(ti) {
                let (a, _) = d.edges[idx];
                let end = if a == ti { 0 } else { 1 };
                d.replace_endpoint(idx, end, c);
            }
            d.nodes.remove(&bo);
            d.nodes.remove(&ti);
            connectors.push(c);
        }
        for c in connectors {
            if d.nodes.contains_key(&c) && matches!(d.kind(c), Some(NodeKind::Z(_))) {
                // A connector may already have been swallowed by eliminating
                // a neighbor connector; only live wire nodes need work.
                if d.degree(c) == 2 {
                    d.eliminate_wire_node(c);
                }
            }
        }
        let violations = d.validate();
        if violations.is_empty() {
            Ok(d)
        } else {
            Err(DiagramError::Invalid(violations.join("; ")))
        }
    }

    /// Checks the structural invariants; empty means well-formed.
    pub fn validate(&self) -> Vec<String> {
        let mut out = Vec::new();
        for &(a, b) in &self.edges {
            for id in [a, b] {
                if !self.nodes.contains_key(&id) {
                    out.push(format!("edge endpoint {id} is not a node"));
                }
            }
        }
        let mut seen = BTreeSet::new();
        for (list, name) in [(&self.inputs, "input"), (&self.outputs, "output")] {
            for &id in list.iter() {
                match self.nodes.get(&id) {
                    None => out.push(format!("{name} {id} is not a node")),
                    Some(k) if !k.is_boundary() => {
                        out.push(format!("{name} {id} is not a boundary node"))
                    }
                    _ => {}
                }
                if !seen.insert(id) {
                    out.push(format!("boundary {id} listed more than once"));
                }
            }
        }
        for (&id, kind) in &self.nodes {
            let deg = self.degree(id);
            match kind {
                NodeKind::H if deg != 2 => {
                    out.push(format!("Hadamard node {id} has degree {deg}, expected 2"))
                }
                NodeKind::B => {
                    if deg != 1 {
                        out.push(format!("boundary node {id} has degree {deg}, expected 1"));
                    }
                    if !seen.contains(&id) {
                        out.push(format!("boundary node {id} is neither input nor output"));
                    }
                }
                _ => {}
            }
        }
        out
    }

    /// The adjoint diagram: inputs and outputs swap roles and every spider
    /// phase is negated. Its matrix is the conjugate transpose of this one's.
    pub fn reversed(&self) -> Diagram {
        let mut d = self.clone();
        std::mem::swap(&mut d.inputs, &mut d.outputs);
        for kind in d.nodes.values_mut() {
            *kind = match *kind {
                NodeKind::Z(p) => NodeKind::Z(-p),
                NodeKind::X(p) => NodeKind::X(-p),
                other => other,
            };
        }
        d
    }

    /// Swaps the colors of all spiders, keeping phases; involutive.
    pub fn color_swap_all(&self) -> Diagram {
        let mut d = self.clone();
        for kind in d.nodes.values_mut() {
            *kind = match *kind {
                NodeKind::Z(p) => NodeKind::X(p),
                NodeKind::X(p) => NodeKind::Z(p),
                other => other,
            };
        }
        d
    }

    /// Edge multiset keyed by normalized endpoint pair.
    fn adjacency(&self) -> BTreeMap<(NodeId, NodeId), usize> {
        let mut adj = BTreeMap::new();
        for &e in &self.edges {
            *adj.entry(e).or_insert(0) += 1;
        }
        adj
    }

    /// Graph isomorphism respecting kinds, phases, edge multiplicities, and
    /// the order of inputs and outputs.
    ///
    /// The boundary lists force their own mapping; internal nodes are matched
    /// by backtracking with kind/degree pruning. Phases compare exactly when
    /// both are rational and within 1e-12 circle distance otherwise.
    pub fn is_isomorphic(a: &Diagram, b: &Diagram) -> bool {
        if a.nodes.len() != b.nodes.len()
            || a.edges.len() != b.edges.len()
            || a.inputs.len() != b.inputs.len()
            || a.outputs.len() != b.outputs.len()
        {
            return false;
        }
        let mut map: BTreeMap<NodeId, NodeId> = BTreeMap::new();
        let mut used: BTreeSet<NodeId> = BTreeSet::new();
        for (x, y) in a.inputs.iter().zip(&b.inputs).chain(a.outputs.iter().zip(&b.outputs)) {
            if let Some(&prev) = map.get(x) {
                if prev != *y {
                    return false;
                }
                continue;
            }
            if !used.insert(*y) {
                return false;
            }
            map.insert(*x, *y);
        }
        let free: Vec<NodeId> = a
            .nodes
            .keys()
            .filter(|id| !map.contains_key(id))
            .copied()
            .collect();
        let adj_a = a.adjacency();
        let adj_b = b.adjacency();
        fn pair(x: NodeId, y: NodeId) -> (NodeId, NodeId) {
            if x <= y {
                (x, y)
            } else {
                (y, x)
            }
        }
        #[allow(clippy::too_many_arguments)]
        fn backtrack(
            idx: usize,
            free: &[NodeId],
            a: &Diagram,
            b: &Diagram,
            adj_a: &BTreeMap<(NodeId, NodeId), usize>,
            adj_b: &BTreeMap<(NodeId, NodeId), usize>,
            map: &mut BTreeMap<NodeId, NodeId>,
            used: &mut BTreeSet<NodeId>,
        ) -> bool {
            if idx == free.len() {
                // All nodes mapped: the per-assignment multiplicity checks
                // already cover every edge, but a full multiset check is cheap
                // insurance.
                let mut mapped: Vec<(NodeId, NodeId)> = a
                    .edges
                    .iter()
                    .map(|&(x, y)| pair(map[&x], map[&y]))
                    .collect();
                mapped.sort_unstable();
                let mut be: Vec<(NodeId, NodeId)> = b.edges.to_vec();
                be.sort_unstable();
                return mapped == be;
            }
            let u = free[idx];
            let ku = a.nodes[&u];
            for (&v, kv) in &b.nodes {
                if used.contains(&v) || !ku.congruent(kv, PHASE_CROSS_TOL) {
                    continue;
                }
                if a.degree(u) != b.degree(v) {
                    continue;
                }
                // Multiplicities toward already-mapped nodes must line up,
                // self-loops included.
                let ok = map.iter().all(|(&x, &y)| {
                    adj_a.get(&pair(u, x)).copied().unwrap_or(0)
                        == adj_b.get(&pair(v, y)).copied().unwrap_or(0)
                }) && adj_a.get(&pair(u, u)).copied().unwrap_or(0)
                    == adj_b.get(&pair(v, v)).copied().unwrap_or(0);
                if !ok {
                    continue;
                }
                map.insert(u, v);
                used.insert(v);
                if backtrack(idx + 1, free, a, b, adj_a, adj_b, map, used) {
                    return true;
                }
                map.remove(&u);
                used.remove(&v);
            }
            false
        }
        backtrack(0, &free, a, b, &adj_a, &adj_b, &mut map, &mut used)
    }
}

/// Wire format node entry.
#[derive(Clone, Debug, Serialize, Deserialize)]
struct NodeDoc {
    id: String,
    kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    phase: Option<PhaseRepr>,
}

/// Wire format for diagrams: nodes with string ids, an edge list, and the
/// ordered boundary lists.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DiagramDoc {
    nodes: Vec<NodeDoc>,
    edges: Vec<(String, String)>,
    inputs: Vec<String>,
    outputs: Vec<String>,
}

impl From<&Diagram> for DiagramDoc {
    fn from(d: &Diagram) -> DiagramDoc {
        let mut nodes = Vec::new();
        for (id, kind) in d.nodes() {
            let (kind_s, phase) = match kind {
                NodeKind::Z(p) => ("Z", Some(PhaseRepr::from(p))),
                NodeKind::X(p) => ("X", Some(PhaseRepr::from(p))),
                NodeKind::H => ("H", None),
                NodeKind::B => ("B", None),
            };
            nodes.push(NodeDoc {
                id: id.to_string(),
                kind: kind_s.to_string(),
                phase,
            });
        }
        let mut edges: Vec<(String, String)> = d
            .edges()
            .iter()
            .map(|&(a, b)| (a.to_string(), b.to_string()))
            .collect();
        edges.sort();
        DiagramDoc {
            nodes,
            edges,
            inputs: d.inputs().iter().map(|i| i.to_string()).collect(),
            outputs: d.outputs().iter().map(|o| o.to_string()).collect(),
        }
    }
}

impl TryFrom<DiagramDoc> for Diagram {
    type Error = DiagramError;

    fn try_from(doc: DiagramDoc) -> Result<Diagram, DiagramError> {
        let mut d = Diagram::new();
        let mut ids: BTreeMap<String, NodeId> = BTreeMap::new();
        for node in &doc.nodes {
            if ids.contains_key(&node.id) {
                return Err(DiagramError::Document(format!("duplicate node id {:?}", node.id)));
            }
            let phase = match node.phase {
                Some(repr) => Some(Phase::try_from(repr).map_err(DiagramError::Document)?),
                None => None,
            };
            let kind = match (node.kind.as_str(), phase) {
                ("Z", Some(p)) => NodeKind::Z(p),
                ("X", Some(p)) => NodeKind::X(p),
                ("Z" | "X", None) => {
                    return Err(DiagramError::Document(format!(
                        "spider {:?} is missing its phase",
                        node.id
                    )))
                }
                ("H", None) => NodeKind::H,
                ("B", None) => NodeKind::B,
                ("H" | "B", Some(_)) => {
                    return Err(DiagramError::Document(format!(
                        "node {:?} of kind {} must not carry a phase",
                        node.id, node.kind
                    )))
                }
                (other, _) => {
                    return Err(DiagramError::Document(format!(
                        "unknown node kind {other:?} (expected Z, X, H, or B)"
                    )))
                }
            };
            let id = d.add_node(kind);
            ids.insert(node.id.clone(), id);
        }
        let lookup = |name: &String| -> Result<NodeId, DiagramError> {
            ids.get(name)
                .copied()
                .ok_or_else(|| DiagramError::Document(format!("unknown node id {name:?}")))
        };
        for (a, b) in &doc.edges {
            d.add_edge(lookup(a)?, lookup(b)?);
        }
        for i in &doc.inputs {
            d.mark_input(lookup(i)?);
        }
        for o in &doc.outputs {
            d.mark_output(lookup(o)?);
        }
        let violations = d.validate();
        if violations.is_empty() {
            Ok(d)
        } else {
            Err(DiagramError::Invalid(violations.join("; ")))
        }
    }
}

impl Diagram {
    /// Serializes to the canonical JSON document.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&DiagramDoc::from(self)).expect("diagram serialization")
    }

    /// Parses the JSON document and validates the result.
    pub fn from_json(text: &str) -> Result<Diagram, DiagramError> {
        let doc: DiagramDoc =
            serde_json::from_str(text).map_err(|e| DiagramError::Document(e.to_string()))?;
        Diagram::try_from(doc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wire() -> Diagram {
        Diagram::generator(Generator::Wire, 1, 1).unwrap()
    }

    #[test]
    fn generators_validate_and_have_expected_shapes() {
        let h = Diagram::generator(Generator::Hadamard, 1, 1).unwrap();
        assert_eq!(h.node_count(), 3);
        assert!(h.validate().is_empty());
        let dot = Diagram::generator(Generator::ZSpider(Phase::ZERO), 0, 0).unwrap();
        assert_eq!(dot.node_count(), 1);
        assert!(dot.inputs().is_empty() && dot.outputs().is_empty());
        let x = Diagram::generator(Generator::XSpider(Phase::rational(1, 4)), 2, 1).unwrap();
        assert_eq!(x.inputs().len(), 2);
        assert_eq!(x.outputs().len(), 1);
        let spider = x.nodes().find(|(_, k)| k.is_spider()).unwrap().0;
        assert_eq!(x.degree(spider), 3);
        for g in [Generator::Wire, Generator::Swap, Generator::Cup, Generator::Cap] {
            assert!(Diagram::generator(g, 9, 9).is_err());
        }
    }

    #[test]
    fn tensor_concatenates_boundaries() {
        let t = Diagram::tensor(&wire(), &wire());
        assert_eq!(t.inputs().len(), 2);
        assert_eq!(t.outputs().len(), 2);
        assert!(t.validate().is_empty());
        let s = Diagram::tensor(
            &Diagram::generator(Generator::ZSpider(Phase::ZERO), 0, 0).unwrap(),
            &wire(),
        );
        assert_eq!(s.node_count(), 3);
        assert!(s.validate().is_empty());
    }

    #[test]
    fn compose_wire_wire_is_wire() {
        let d = Diagram::compose(&wire(), &wire()).unwrap();
        assert!(Diagram::is_isomorphic(&d, &wire()));
    }

    #[test]
    fn compose_cup_cap_closes_to_circle() {
        let cup = Diagram::generator(Generator::Cup, 2, 0).unwrap();
        let cap = Diagram::generator(Generator::Cap, 0, 2).unwrap();
        let d = Diagram::compose(&cup, &cap).unwrap();
        assert!(d.inputs().is_empty() && d.outputs().is_empty());
        // One wire node carrying a self-loop: the circle.
        assert_eq!(d.node_count(), 1);
        let (id, kind) = d.nodes().next().unwrap();
        assert!(matches!(kind, NodeKind::Z(p) if p.is_zero(0.0)));
        assert_eq!(d.degree(id), 2);
    }

    #[test]
    fn compose_arity_mismatch_rejected() {
        let cup = Diagram::generator(Generator::Cup, 2, 0).unwrap();
        assert!(Diagram::compose(&cup, &wire()).is_err());
    }

    #[test]
    fn isomorphism_ignores_ids_but_not_wiring() {
        let a = Diagram::generator(Generator::ZSpider(Phase::rational(1, 3)), 1, 1).unwrap();
        // Same diagram built in a different id order.
        let mut b = Diagram::new();
        let out = b.add_node(NodeKind::B);
        let s = b.add_node(NodeKind::Z(Phase::rational(1, 3)));
        let inp = b.add_node(NodeKind::B);
        b.add_edge(s, out);
        b.add_edge(inp, s);
        b.mark_input(inp);
        b.mark_output(out);
        assert!(Diagram::is_isomorphic(&a, &b));
        let x = Diagram::generator(Generator::XSpider(Phase::rational(1, 3)), 1, 1).unwrap();
        assert!(!Diagram::is_isomorphic(&a, &x));
        // Crossed wires differ from straight ones only in boundary wiring.
        let straight = Diagram::tensor(&wire(), &wire());
        let crossed = Diagram::generator(Generator::Swap, 2, 2).unwrap();
        assert!(!Diagram::is_isomorphic(&straight, &crossed));
    }

    #[test]
    fn isomorphism_counts_parallel_edges() {
        let mut a = Diagram::new();
        let z = a.add_node(NodeKind::Z(Phase::ZERO));
        let x = a.add_node(NodeKind::X(Phase::ZERO));
        a.add_edge(z, x);
        a.add_edge(z, x);
        let mut b = Diagram::new();
        let z2 = b.add_node(NodeKind::Z(Phase::ZERO));
        let x2 = b.add_node(NodeKind::X(Phase::ZERO));
        b.add_edge(z2, x2);
        b.add_edge(z2, x2);
        assert!(Diagram::is_isomorphic(&a, &b));
        let mut c = Diagram::new();
        let z3 = c.add_node(NodeKind::Z(Phase::ZERO));
        let x3 = c.add_node(NodeKind::X(Phase::ZERO));
        c.add_edge(z3, x3);
        c.add_edge(z3, z3);
        assert!(!Diagram::is_isomorphic(&a, &c));
    }

    #[test]
    fn validate_reports_violations() {
        assert!(wire().validate().is_empty());
        let mut d = Diagram::new();
        let h = d.add_node(NodeKind::H);
        let b1 = d.add_node(NodeKind::B);
        let b2 = d.add_node(NodeKind::B);
        let b3 = d.add_node(NodeKind::B);
        d.add_edge(h, b1);
        d.add_edge(h, b2);
        d.add_edge(h, b3);
        d.mark_input(b1);
        d.mark_output(b2);
        d.mark_output(b3);
        let v = d.validate();
        assert!(v.iter().any(|s| s.contains("Hadamard")), "{v:?}");
        // Same id as both input and output.
        let mut e = Diagram::new();
        let z = e.add_node(NodeKind::Z(Phase::ZERO));
        let b = e.add_node(NodeKind::B);
        e.add_edge(z, b);
        e.mark_input(b);
        e.mark_output(b);
        assert!(!e.validate().is_empty());
    }

    #[test]
    fn color_swap_is_involutive() {
        let d = Diagram::generator(Generator::ZSpider(Phase::rational(2, 3)), 1, 2).unwrap();
        let once = d.color_swap_all();
        assert!(once.nodes().any(|(_, k)| matches!(k, NodeKind::X(_))));
        let twice = once.color_swap_all();
        assert!(Diagram::is_isomorphic(&d, &twice));
        let h = Diagram::generator(Generator::Hadamard, 1, 1).unwrap();
        assert!(Diagram::is_isomorphic(&h, &h.color_swap_all()));
    }

    #[test]
    fn interchange_law_on_small_case() {
        // compose(tensor(a,b), tensor(c,d)) ≅ tensor(compose(a,c), compose(b,d))
        let a = Diagram::generator(Generator::ZSpider(Phase::rational(1, 4)), 1, 1).unwrap();
        let b = Diagram::generator(Generator::Hadamard, 1, 1).unwrap();
        let c = Diagram::generator(Generator::XSpider(Phase::rational(1, 2)), 1, 1).unwrap();
        let dd = wire();
        let lhs = Diagram::compose(&Diagram::tensor(&a, &b), &Diagram::tensor(&c, &dd)).unwrap();
        let rhs = Diagram::tensor(
            &Diagram::compose(&a, &c).unwrap(),
            &Diagram::compose(&b, &dd).unwrap(),
        );
        assert!(Diagram::is_isomorphic(&lhs, &rhs));
    }

    #[test]
    fn json_round_trip_preserves_structure() {
        let d = Diagram::generator(Generator::XSpider(Phase::radians(1.234)), 2, 1).unwrap();
        let text = d.to_json();
        let back = Diagram::from_json(&text).unwrap();
        assert!(Diagram::is_isomorphic(&d, &back));
        assert_eq!(text, back.to_json());
    }

    #[test]
    fn json_rejects_malformed_documents() {
        for text in [
            "{",
            r#"{"nodes": [], "edges": [["a","b"]], "inputs": [], "outputs": []}"#,
            r#"{"nodes": [{"id":"a","kind":"Q"}], "edges": [], "inputs": [], "outputs": []}"#,
            r#"{"nodes": [{"id":"a","kind":"Z"}], "edges": [], "inputs": [], "outputs": []}"#,
            r#"{"nodes": [{"id":"a","kind":"B"}], "edges": [], "inputs": [], "outputs": []}"#,
        ] {
            assert!(Diagram::from_json(text).is_err(), "accepted: {text}");
        }
    }
}
