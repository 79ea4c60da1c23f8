//! The rewrite-rule library: patterns, matching, and graph surgery.
//!
//! A rule has two pattern sides. Pattern spiders carry phase expressions over
//! metavariables and optional variable-arity leg groups; pattern ports mark
//! the fixed open legs of the redex. Matches found in a host diagram can be
//! applied in either direction; the rewrite cuts the matched subgraph out and
//! splices the instantiated other side into the same attachment points.

use crate::diagram::{Diagram, NodeId, NodeKind};
use crate::matrix::CompareMode;
use crate::phase::Phase;
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

/// Index of a phase metavariable within a rule.
pub type VarId = u8;
/// Identifier of a variable-arity leg group within a rule.
pub type GroupId = u8;

/// Tolerance for phase agreement when matching host spiders against pattern
/// phase expressions.
const MATCH_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum RuleError {
    #[error("match belongs to rule {found}, not {expected}")]
    RuleMismatch { expected: String, found: String },
    #[error("stale match: {0}")]
    Stale(String),
    #[error("rewrite produced an invalid diagram: {0}")]
    ProducedInvalid(String),
    #[error("bad instantiation: {0}")]
    Instantiate(String),
}

/// Which side of a rule a pattern is.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Lhs,
    Rhs,
}

/// Orientation of a rewrite: `Forward` replaces the left side by the right,
/// `Reverse` the right by the left.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Reverse,
}

/// An affine phase expression: a constant plus integer multiples of
/// metavariables. All built-in rules use coefficients of magnitude one.
#[derive(Clone, Debug)]
pub struct PhaseExpr {
    base: Phase,
    terms: Vec<(VarId, i64)>,
}

impl PhaseExpr {
    pub fn constant(p: Phase) -> PhaseExpr {
        PhaseExpr {
            base: p,
            terms: Vec::new(),
        }
    }

    pub fn var(v: VarId) -> PhaseExpr {
        PhaseExpr {
            base: Phase::ZERO,
            terms: vec![(v, 1)],
        }
    }

    pub fn neg_var(v: VarId) -> PhaseExpr {
        PhaseExpr {
            base: Phase::ZERO,
            terms: vec![(v, -1)],
        }
    }

    pub fn sum(a: VarId, b: VarId) -> PhaseExpr {
        PhaseExpr {
            base: Phase::ZERO,
            terms: vec![(a, 1), (b, 1)],
        }
    }

    /// Evaluates under a binding; unbound metavariables count as zero.
    fn eval(&self, binding: &[Option<Phase>]) -> Phase {
        let mut acc = self.base;
        for &(v, c) in &self.terms {
            let val = binding
                .get(v as usize)
                .copied()
                .flatten()
                .unwrap_or(Phase::ZERO);
            acc = acc + val.scale(c);
        }
        acc
    }

    /// Unifies the expression with a concrete host phase, extending the
    /// binding. With several unbound variables, all but the first are set to
    /// zero and the first absorbs the slack; with none, the phases must agree
    /// within tolerance. Returns the variables newly bound (for backtracking).
    fn unify(&self, host: Phase, binding: &mut [Option<Phase>]) -> Result<Vec<VarId>, ()> {
        let mut known = self.base;
        let mut unbound: Vec<(VarId, i64)> = Vec::new();
        for &(v, c) in &self.terms {
            match binding.get(v as usize).copied().flatten() {
                Some(val) => known = known + val.scale(c),
                None => unbound.push((v, c)),
            }
        }
        if unbound.is_empty() {
            return if host.congruent(known, MATCH_TOL) {
                Ok(Vec::new())
            } else {
                Err(())
            };
        }
        let mut written = Vec::new();
        for &(v, _) in &unbound[1..] {
            binding[v as usize] = Some(Phase::ZERO);
            written.push(v);
        }
        let (v0, c0) = unbound[0];
        debug_assert!(c0.abs() == 1, "built-in rules use unit coefficients");
        let slack = host + (-known);
        binding[v0 as usize] = Some(if c0 == 1 { slack } else { -slack });
        written.push(v0);
        Ok(written)
    }
}

/// Spider color in a pattern.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PatColor {
    Green,
    Red,
}

/// One pattern node.
#[derive(Clone, Debug)]
enum PatNode {
    /// A fixed open leg of the redex.
    Port,
    /// A spider with a phase expression and optional leg groups.
    Spider {
        color: PatColor,
        phase: PhaseExpr,
        groups: Vec<GroupId>,
    },
    /// A Hadamard box (always degree 2).
    HBox,
}

/// One side of a rule.
#[derive(Clone, Debug)]
struct Pattern {
    nodes: Vec<PatNode>,
    edges: Vec<(usize, usize)>,
    /// Port node indices in correspondence order across the two sides.
    ports: Vec<usize>,
    /// Groups whose legs pass through a Hadamard box on this side.
    hgroups: Vec<GroupId>,
}

impl Pattern {
    fn is_port(&self, i: usize) -> bool {
        matches!(self.nodes[i], PatNode::Port)
    }

    fn real_nodes(&self) -> Vec<usize> {
        (0..self.nodes.len())
            .filter(|&i| !self.is_port(i))
            .collect()
    }

    /// Number of edge endpoints at a node (its degree inside the pattern).
    fn fixed_degree(&self, i: usize) -> usize {
        self.edges
            .iter()
            .map(|&(a, b)| (a == i) as usize + (b == i) as usize)
            .sum()
    }

    fn groups_of(&self, i: usize) -> &[GroupId] {
        match &self.nodes[i] {
            PatNode::Spider { groups, .. } => groups,
            _ => &[],
        }
    }

    fn group_ids(&self) -> Vec<GroupId> {
        let mut ids: Vec<GroupId> = self
            .nodes
            .iter()
            .flat_map(|n| match n {
                PatNode::Spider { groups, .. } => groups.clone(),
                _ => Vec::new(),
            })
            .collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    /// The real node owning a group (each group lives on exactly one node).
    fn group_owner(&self, g: GroupId) -> Option<usize> {
        (0..self.nodes.len()).find(|&i| self.groups_of(i).contains(&g))
    }

    /// True if this side is a bare wire: exactly two ports joined by an edge.
    fn is_bare_wire(&self) -> bool {
        self.nodes.len() == 2
            && self.edges.len() == 1
            && self.ports.len() == 2
            && self.nodes.iter().all(|n| matches!(n, PatNode::Port))
    }

    /// Builds a standalone diagram for this side. Ports become boundary
    /// nodes marked as outputs in port order, followed by `arities[g]`
    /// boundary legs per group in ascending group order. Legs of groups in
    /// `hgroups` pass through a fresh Hadamard box.
    fn instantiate(
        &self,
        binding: &[Option<Phase>],
        arities: &BTreeMap<GroupId, usize>,
    ) -> Result<Diagram, RuleError> {
        let mut d = Diagram::new();
        let mut ids: Vec<Option<NodeId>> = Vec::with_capacity(self.nodes.len());
        for node in &self.nodes {
            let id = match node {
                PatNode::Port => d.add_node(NodeKind::B),
                PatNode::HBox => d.add_node(NodeKind::H),
                PatNode::Spider { color, phase, .. } => {
                    let p = phase.eval(binding);
                    d.add_node(match color {
                        PatColor::Green => NodeKind::Z(p),
                        PatColor::Red => NodeKind::X(p),
                    })
                }
            };
            ids.push(Some(id));
        }
        for &(a, b) in &self.edges {
            d.add_edge(ids[a].unwrap(), ids[b].unwrap());
        }
        for &p in &self.ports {
            d.mark_output(ids[p].unwrap());
        }
        for g in self.group_ids() {
            let owner = ids[self
                .group_owner(g)
                .ok_or_else(|| RuleError::Instantiate(format!("group {g} has no owner")))?]
            .unwrap();
            let n = arities.get(&g).copied().unwrap_or(0);
            for _ in 0..n {
                let b = d.add_node(NodeKind::B);
                if self.hgroups.contains(&g) {
                    let h = d.add_node(NodeKind::H);
                    d.add_edge(owner, h);
                    d.add_edge(h, b);
                } else {
                    d.add_edge(owner, b);
                }
                d.mark_output(b);
            }
        }
        let violations = d.validate();
        if !violations.is_empty() {
            return Err(RuleError::Instantiate(violations.join("; ")));
        }
        Ok(d)
    }
}

/// A named rewrite rule with two pattern sides and the comparison mode under
/// which its soundness is checked.
#[derive(Clone, Debug)]
pub struct RewriteRule {
    pub name: String,
    lhs: Pattern,
    rhs: Pattern,
    pub mode: CompareMode,
    /// Number of phase metavariables shared by the two sides.
    pub vars: u8,
}

impl RewriteRule {
    fn new(name: &str, lhs: Pattern, rhs: Pattern, mode: CompareMode, vars: u8) -> RewriteRule {
        debug_assert_eq!(lhs.ports.len(), rhs.ports.len(), "{name}: port count");
        debug_assert_eq!(lhs.group_ids(), rhs.group_ids(), "{name}: group ids");
        RewriteRule {
            name: name.to_string(),
            lhs,
            rhs,
            mode,
            vars,
        }
    }

    fn sides(&self, dir: Direction) -> (&Pattern, &Pattern) {
        match dir {
            Direction::Forward => (&self.lhs, &self.rhs),
            Direction::Reverse => (&self.rhs, &self.lhs),
        }
    }

    /// Sorted group ids of the rule (same on both sides).
    pub fn group_ids(&self) -> Vec<GroupId> {
        self.lhs.group_ids()
    }

    /// Builds one side as a standalone diagram with all legs as outputs.
    pub fn instantiate(
        &self,
        side: Side,
        binding: &[Phase],
        arities: &BTreeMap<GroupId, usize>,
    ) -> Result<Diagram, RuleError> {
        let p = match side {
            Side::Lhs => &self.lhs,
            Side::Rhs => &self.rhs,
        };
        let opt: Vec<Option<Phase>> = binding.iter().copied().map(Some).collect();
        p.instantiate(&opt, arities)
    }
}

/// How a port of the matched pattern attaches to the host.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum PortAttach {
    /// An edge from a matched node to the rest of the diagram; `end` is the
    /// endpoint at the matched `inside` node, which the rewrite re-routes.
    Node {
        edge: usize,
        end: u8,
        inside: NodeId,
    },
    /// First half of a bare-wire redex on edge `(a, b)`: attaches at `a`.
    SplitA { edge: usize, a: NodeId, b: NodeId },
    /// Second half of a bare-wire redex: attaches at `b`.
    SplitB { edge: usize, a: NodeId, b: NodeId },
}

/// One leg of a variable-arity group in the host.
#[derive(Clone, Copy, Debug)]
struct GroupLeg {
    edge: usize,
    end: u8,
    /// The node at the re-routed end: the matched spider, or the in-between
    /// Hadamard box for a through-Hadamard leg.
    inside: NodeId,
    via_h: Option<NodeId>,
}

/// A located occurrence of one rule side in a host diagram.
#[derive(Clone, Debug)]
pub struct Match {
    rule: String,
    direction: Direction,
    assign: BTreeMap<usize, NodeId>,
    binding: Vec<Option<Phase>>,
    ports: Vec<PortAttach>,
    groups: BTreeMap<GroupId, Vec<GroupLeg>>,
    /// Host edges consumed by pattern-internal edges, with their endpoints.
    internal: Vec<(usize, NodeId, NodeId)>,
}

impl Match {
    pub fn rule_name(&self) -> &str {
        &self.rule
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    /// Host nodes consumed by the rewrite (matched nodes and any in-between
    /// Hadamard boxes of through-Hadamard legs).
    pub fn matched_nodes(&self) -> Vec<NodeId> {
        let mut ids: Vec<NodeId> = self.assign.values().copied().collect();
        for legs in self.groups.values() {
            for leg in legs {
                if let Some(h) = leg.via_h {
                    ids.push(h);
                }
            }
        }
        ids.sort_unstable();
        ids.dedup();
        ids
    }

    /// The phase bound to a metavariable, if the match bound it.
    pub fn bound_phase(&self, v: VarId) -> Option<Phase> {
        self.binding.get(v as usize).copied().flatten()
    }

    fn sort_key(&self) -> (Vec<NodeId>, Vec<(usize, u8)>, String) {
        let ids = self.matched_nodes();
        let slots: Vec<(usize, u8)> = self
            .ports
            .iter()
            .map(|p| match *p {
                PortAttach::Node { edge, end, .. } => (edge, end),
                PortAttach::SplitA { edge, .. } => (edge, 0),
                PortAttach::SplitB { edge, .. } => (edge, 1),
            })
            .collect();
        (ids, slots, format!("{:?}", self.groups))
    }
}

/// Normalized endpoint pair, matching the diagram's edge storage.
fn norm(a: NodeId, b: NodeId) -> (NodeId, NodeId) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Edge slots owned by a node, in (edge index, end) order; a self-loop owns
/// both slots of its edge.
fn slots_at(d: &Diagram, id: NodeId) -> Vec<(usize, u8)> {
    let mut out = Vec::new();
    for (idx, &(a, b)) in d.edges().iter().enumerate() {
        if a == id {
            out.push((idx, 0));
        }
        if b == id {
            out.push((idx, 1));
        }
    }
    out
}

fn kind_fits(pat: &PatNode, kind: &NodeKind) -> bool {
    matches!(
        (pat, kind),
        (PatNode::Spider { color: PatColor::Green, .. }, NodeKind::Z(_))
            | (PatNode::Spider { color: PatColor::Red, .. }, NodeKind::X(_))
            | (PatNode::HBox, NodeKind::H)
    )
}

/// Finds all occurrences of the source side of `rule` (the left side for
/// `Forward`, the right for `Reverse`) in `d`, in a deterministic order.
///
/// Matching is injective on nodes. A spider without groups must have exactly
/// the pattern degree; with groups, surplus legs become group legs. Matches
/// are sorted by their matched node ids, then attachment slots.
pub fn find_matches(d: &Diagram, rule: &RewriteRule, direction: Direction) -> Vec<Match> {
    let (src, _) = rule.sides(direction);
    let mut out: Vec<Match> = Vec::new();

    if src.is_bare_wire() {
        // The redex is a single wire: every host edge is an occurrence.
        for (idx, &(a, b)) in d.edges().iter().enumerate() {
            out.push(Match {
                rule: rule.name.clone(),
                direction,
                assign: BTreeMap::new(),
                binding: vec![None; rule.vars as usize],
                ports: vec![
                    PortAttach::SplitA { edge: idx, a, b },
                    PortAttach::SplitB { edge: idx, a, b },
                ],
                groups: BTreeMap::new(),
                internal: Vec::new(),
            });
        }
        return out;
    }

    let real = src.real_nodes();
    let host_ids: Vec<NodeId> = d.nodes().map(|(id, _)| id).collect();
    // Host edge multiplicity per endpoint pair, for early pruning.
    let mut mult: BTreeMap<(NodeId, NodeId), usize> = BTreeMap::new();
    for &(a, b) in d.edges() {
        *mult.entry((a, b)).or_insert(0) += 1;
    }
    let pat_mult = |i: usize, j: usize| -> usize {
        src.edges
            .iter()
            .filter(|&&(a, b)| (a, b) == (i, j) || (a, b) == (j, i))
            .count()
    };

    let mut assign: BTreeMap<usize, NodeId> = BTreeMap::new();
    let mut used_hosts: BTreeSet<NodeId> = BTreeSet::new();
    let mut binding: Vec<Option<Phase>> = vec![None; rule.vars as usize];

    #[allow(clippy::too_many_arguments)]
    fn recurse(
        d: &Diagram,
        rule: &RewriteRule,
        direction: Direction,
        src: &Pattern,
        real: &[usize],
        host_ids: &[NodeId],
        mult: &BTreeMap<(NodeId, NodeId), usize>,
        pat_mult: &dyn Fn(usize, usize) -> usize,
        level: usize,
        assign: &mut BTreeMap<usize, NodeId>,
        used_hosts: &mut BTreeSet<NodeId>,
        binding: &mut Vec<Option<Phase>>,
        out: &mut Vec<Match>,
    ) {
        if level == real.len() {
            resolve(d, rule, direction, src, assign, binding, out);
            return;
        }
        let pi = real[level];
        for &h in host_ids {
            if used_hosts.contains(&h) {
                continue;
            }
            let Some(kind) = d.kind(h) else { continue };
            if !kind_fits(&src.nodes[pi], &kind) {
                continue;
            }
            let fixed = src.fixed_degree(pi);
            let has_groups = !src.groups_of(pi).is_empty();
            let deg = d.degree(h);
            if (has_groups && deg < fixed) || (!has_groups && deg != fixed) {
                continue;
            }
            // Every already-assigned pattern neighbor must be reachable with
            // enough parallel host edges.
            let mut edges_ok = true;
            for j in real {
                if *j != pi && !assign.contains_key(j) {
                    continue;
                }
                let need = pat_mult(pi, *j);
                if need == 0 {
                    continue;
                }
                let himg = if *j == pi { h } else { assign[j] };
                let have = mult.get(&norm(h, himg)).copied().unwrap_or(0);
                if have < need {
                    edges_ok = false;
                    break;
                }
            }
            if !edges_ok {
                continue;
            }
            let written = match &src.nodes[pi] {
                PatNode::Spider { phase, .. } => {
                    let host_phase = kind.phase().expect("spider kind");
                    match phase.unify(host_phase, binding) {
                        Ok(w) => w,
                        Err(()) => continue,
                    }
                }
                _ => Vec::new(),
            };
            assign.insert(pi, h);
            used_hosts.insert(h);
            recurse(
                d, rule, direction, src, real, host_ids, mult, pat_mult,
                level + 1, assign, used_hosts, binding, out,
            );
            used_hosts.remove(&h);
            assign.remove(&pi);
            for v in written {
                binding[v as usize] = None;
            }
        }
    }

    fn resolve(
        d: &Diagram,
        rule: &RewriteRule,
        direction: Direction,
        src: &Pattern,
        assign: &BTreeMap<usize, NodeId>,
        binding: &[Option<Phase>],
        out: &mut Vec<Match>,
    ) {
        let mut used: BTreeSet<(usize, u8)> = BTreeSet::new();
        let mut internal: Vec<(usize, NodeId, NodeId)> = Vec::new();

        // 1. Pattern-internal edges consume whole host edges, lowest first.
        for &(pa, pb) in &src.edges {
            if src.is_port(pa) || src.is_port(pb) {
                continue;
            }
            let want = norm(assign[&pa], assign[&pb]);
            let found = d.edges().iter().enumerate().find(|(idx, &e)| {
                e == want && !used.contains(&(*idx, 0)) && !used.contains(&(*idx, 1))
            });
            let Some((idx, _)) = found else { return };
            used.insert((idx, 0));
            used.insert((idx, 1));
            internal.push((idx, want.0, want.1));
        }

        // 2. Ports, in correspondence order, each take the lowest free slot at
        // their pattern neighbor. Two ports of the same pattern node may not
        // take the two ends of one edge (that occurrence is a closed loop on
        // the node, which the fixed rules do not rewrite).
        let mut ports: Vec<PortAttach> = Vec::new();
        let mut port_claim: BTreeMap<(usize, u8), usize> = BTreeMap::new();
        for &p in &src.ports {
            let neighbor = src
                .edges
                .iter()
                .find_map(|&(a, b)| {
                    if a == p {
                        Some(b)
                    } else if b == p {
                        Some(a)
                    } else {
                        None
                    }
                })
                .expect("port has exactly one pattern edge");
            debug_assert!(!src.is_port(neighbor), "bare-wire handled separately");
            let h = assign[&neighbor];
            let slot = slots_at(d, h).into_iter().find(|&(e, end)| {
                !used.contains(&(e, end))
                    && port_claim.get(&(e, 1 - end)).copied() != Some(neighbor)
            });
            let Some((e, end)) = slot else { return };
            used.insert((e, end));
            port_claim.insert((e, end), neighbor);
            ports.push(PortAttach::Node {
                edge: e,
                end,
                inside: h,
            });
        }

        // 3. Surplus legs at group-bearing spiders. One group takes them all;
        // two groups split them every possible way, one match per split.
        struct Branch {
            groups: BTreeMap<GroupId, Vec<GroupLeg>>,
            vias: BTreeSet<NodeId>,
        }
        let mut branches = vec![Branch {
            groups: BTreeMap::new(),
            vias: BTreeSet::new(),
        }];
        for (pi, &h) in assign {
            let gids = src.groups_of(*pi);
            if gids.is_empty() {
                continue;
            }
            let leftover: Vec<(usize, u8)> = slots_at(d, h)
                .into_iter()
                .filter(|s| !used.contains(s))
                .collect();
            let parts: Vec<Vec<GroupId>> = match gids.len() {
                1 => vec![leftover.iter().map(|_| gids[0]).collect()],
                2 => (0..(1usize << leftover.len()))
                    .map(|mask| {
                        (0..leftover.len())
                            .map(|t| gids[(mask >> t) & 1])
                            .collect()
                    })
                    .collect(),
                _ => return,
            };
            let mut next: Vec<Branch> = Vec::new();
            for branch in &branches {
                'part: for part in &parts {
                    let mut groups = branch.groups.clone();
                    let mut vias = branch.vias.clone();
                    for (t, &(e, end)) in leftover.iter().enumerate() {
                        let g = part[t];
                        let leg = if src.hgroups.contains(&g) {
                            let Some(leg) = through_h_leg(d, assign, &vias, h, e, end) else {
                                continue 'part;
                            };
                            vias.insert(leg.via_h.unwrap());
                            leg
                        } else {
                            GroupLeg {
                                edge: e,
                                end,
                                inside: h,
                                via_h: None,
                            }
                        };
                        groups.entry(g).or_default().push(leg);
                    }
                    next.push(Branch { groups, vias });
                }
            }
            branches = next;
        }

        for branch in branches {
            let mut groups = branch.groups;
            for g in src.group_ids() {
                groups.entry(g).or_default();
            }
            out.push(Match {
                rule: rule.name.clone(),
                direction,
                assign: assign.clone(),
                binding: binding.to_vec(),
                ports: ports.clone(),
                groups,
                internal: internal.clone(),
            });
        }
    }

    /// Resolves one through-Hadamard group leg: the slot's edge must lead to
    /// an unmatched, unused, degree-2 Hadamard box whose far edge leaves the
    /// matched region.
    fn through_h_leg(
        d: &Diagram,
        assign: &BTreeMap<usize, NodeId>,
        vias: &BTreeSet<NodeId>,
        h: NodeId,
        e: usize,
        end: u8,
    ) -> Option<GroupLeg> {
        let (a, b) = d.edges()[e];
        let hb = if end == 0 { b } else { a };
        if hb == h || vias.contains(&hb) || assign.values().any(|&v| v == hb) {
            return None;
        }
        if !matches!(d.kind(hb), Some(NodeKind::H)) || d.degree(hb) != 2 {
            return None;
        }
        let (fe, fend) = slots_at(d, hb).into_iter().find(|&(fi, _)| fi != e)?;
        let (fa, fb) = d.edges()[fe];
        let far = if fend == 0 { fb } else { fa };
        if vias.contains(&far) || assign.values().any(|&v| v == far) || far == hb {
            return None;
        }
        Some(GroupLeg {
            edge: fe,
            end: fend,
            inside: hb,
            via_h: Some(hb),
        })
    }

    recurse(
        d,
        rule,
        direction,
        src,
        &real,
        &host_ids,
        &mult,
        &|i, j| pat_mult(i, j),
        0,
        &mut assign,
        &mut used_hosts,
        &mut binding,
        &mut out,
    );
    out.sort_by_cached_key(|m| m.sort_key());
    out
}

/// Checks that a match still fits the diagram exactly as recorded.
fn check_fresh(d: &Diagram, rule: &RewriteRule, m: &Match) -> Result<(), RuleError> {
    let (src, _) = rule.sides(m.direction);
    let stale = |what: String| Err(RuleError::Stale(what));
    for (&pi, &h) in &m.assign {
        let Some(kind) = d.kind(h) else {
            return stale(format!("matched node {h} is gone"));
        };
        if !kind_fits(&src.nodes[pi], &kind) {
            return stale(format!("node {h} changed kind"));
        }
        if let PatNode::Spider { phase, .. } = &src.nodes[pi] {
            let want = phase.eval(&m.binding);
            let have = kind.phase().expect("spider kind");
            if !have.congruent(want, MATCH_TOL) {
                return stale(format!("node {h} changed phase"));
            }
        }
    }
    let edge_is = |idx: usize, a: NodeId, b: NodeId| -> bool {
        d.edges().get(idx).copied() == Some(norm(a, b))
    };
    for &(idx, a, b) in &m.internal {
        if !edge_is(idx, a, b) {
            return stale(format!("internal edge {idx} changed"));
        }
    }
    let touch = |idx: usize, node: NodeId| -> bool {
        d.edges()
            .get(idx)
            .map(|&(a, b)| a == node || b == node)
            .unwrap_or(false)
    };
    for p in &m.ports {
        match *p {
            PortAttach::Node { edge, inside, .. } => {
                if !touch(edge, inside) {
                    return stale(format!("port edge {edge} detached"));
                }
            }
            PortAttach::SplitA { edge, a, b } | PortAttach::SplitB { edge, a, b } => {
                if !edge_is(edge, a, b) {
                    return stale(format!("wire {edge} changed"));
                }
            }
        }
    }
    for legs in m.groups.values() {
        for leg in legs {
            if !touch(leg.edge, leg.inside) {
                return stale(format!("group leg edge {} detached", leg.edge));
            }
            if let Some(hb) = leg.via_h {
                if !matches!(d.kind(hb), Some(NodeKind::H)) || d.degree(hb) != 2 {
                    return stale(format!("in-between Hadamard {hb} changed"));
                }
            }
        }
    }
    Ok(())
}

/// Re-routes the `inside` end of an edge to a fresh node, tolerating the
/// normalized endpoint order having flipped since the match was taken.
fn reroute(d: &mut Diagram, edge: usize, end: u8, inside: NodeId, to: NodeId) {
    let (a, b) = d.edges()[edge];
    let pos = match end {
        0 if a == inside => 0,
        1 if b == inside => 1,
        _ if a == inside => 0,
        _ if b == inside => 1,
        _ => unreachable!("validated before surgery"),
    };
    d.replace_endpoint(edge, pos, to);
}

/// Applies a match of `rule` to `d`, returning the rewritten diagram.
///
/// The match must have been produced for this rule, and the diagram must
/// still contain it unchanged; otherwise an error is returned and `d` is
/// untouched. The matched nodes are removed, the other side of the rule is
/// built in their place, and the old attachment points are spliced onto it.
pub fn apply(d: &Diagram, rule: &RewriteRule, m: &Match) -> Result<Diagram, RuleError> {
    if m.rule != rule.name {
        return Err(RuleError::RuleMismatch {
            expected: rule.name.clone(),
            found: m.rule.clone(),
        });
    }
    check_fresh(d, rule, m)?;
    let (_, dst) = rule.sides(m.direction);
    let mut out = d.clone();

    // 1. Detach every attachment point onto a fresh degree-2 wire node.
    let mut connectors: Vec<NodeId> = Vec::new();
    let mut port_conn: Vec<NodeId> = Vec::new();
    for p in &m.ports {
        let c = out.add_node(NodeKind::Z(Phase::ZERO));
        match *p {
            PortAttach::Node { edge, end, inside } => reroute(&mut out, edge, end, inside, c),
            PortAttach::SplitA { edge, a, b } => {
                // Cut the wire: this half keeps the edge, re-routed off `b`.
                let (ca, cb) = out.edges()[edge];
                debug_assert_eq!((ca, cb), norm(a, b));
                let pos = if (ca, cb) == (a, b) { 1 } else { 0 };
                out.replace_endpoint(edge, pos, c);
            }
            PortAttach::SplitB { edge: _, a: _, b } => {
                out.add_edge(c, b);
            }
        }
        port_conn.push(c);
        connectors.push(c);
    }
    let mut group_conn: BTreeMap<GroupId, Vec<NodeId>> = BTreeMap::new();
    for (&g, legs) in &m.groups {
        let mut cs = Vec::new();
        for leg in legs {
            let c = out.add_node(NodeKind::Z(Phase::ZERO));
            reroute(&mut out, leg.edge, leg.end, leg.inside, c);
            cs.push(c);
            connectors.push(c);
        }
        group_conn.insert(g, cs);
    }

    // 2. Build the destination side in place.
    let mut new_nodes: BTreeMap<usize, NodeId> = BTreeMap::new();
    for (i, node) in dst.nodes.iter().enumerate() {
        match node {
            PatNode::Port => {}
            PatNode::HBox => {
                new_nodes.insert(i, out.add_node(NodeKind::H));
            }
            PatNode::Spider { color, phase, .. } => {
                let p = phase.eval(&m.binding);
                let kind = match color {
                    PatColor::Green => NodeKind::Z(p),
                    PatColor::Red => NodeKind::X(p),
                };
                new_nodes.insert(i, out.add_node(kind));
            }
        }
    }
    let endpoint = |i: usize, new_nodes: &BTreeMap<usize, NodeId>| -> NodeId {
        if let Some(&id) = new_nodes.get(&i) {
            id
        } else {
            let pos = dst.ports.iter().position(|&p| p == i).expect("port listed");
            port_conn[pos]
        }
    };
    for &(a, b) in &dst.edges {
        let (ha, hb) = (endpoint(a, &new_nodes), endpoint(b, &new_nodes));
        out.add_edge(ha, hb);
    }
    for (g, cs) in &group_conn {
        let owner_pat = dst
            .group_owner(*g)
            .ok_or_else(|| RuleError::ProducedInvalid(format!("group {g} missing on target side")))?;
        let owner = new_nodes[&owner_pat];
        for &c in cs {
            if dst.hgroups.contains(g) {
                let hb = out.add_node(NodeKind::H);
                out.add_edge(owner, hb);
                out.add_edge(hb, c);
            } else {
                out.add_edge(owner, c);
            }
        }
    }

    // 3. Delete the matched region.
    for id in m.matched_nodes() {
        out.remove_node(id);
    }

    // 4. Splice out the temporary wire nodes.
    for c in connectors {
        if out.kind(c).is_none() {
            continue;
        }
        if out.degree(c) != 2 {
            return Err(RuleError::ProducedInvalid(format!(
                "attachment point {c} ended with degree {}",
                out.degree(c)
            )));
        }
        out.eliminate_wire_node(c);
    }

    let violations = out.validate();
    if !violations.is_empty() {
        return Err(RuleError::ProducedInvalid(violations.join("; ")));
    }
    Ok(out)
}

fn green() -> PatColor {
    PatColor::Green
}

fn red() -> PatColor {
    PatColor::Red
}

fn spider(color: PatColor, phase: PhaseExpr, groups: Vec<GroupId>) -> PatNode {
    PatNode::Spider {
        color,
        phase,
        groups,
    }
}

fn c0() -> PhaseExpr {
    PhaseExpr::constant(Phase::ZERO)
}

fn cpi() -> PhaseExpr {
    PhaseExpr::constant(Phase::PI)
}

fn half_pi() -> PhaseExpr {
    PhaseExpr::constant(Phase::rational(1, 2))
}

fn pattern(
    nodes: Vec<PatNode>,
    edges: Vec<(usize, usize)>,
    ports: Vec<usize>,
    hgroups: Vec<GroupId>,
) -> Pattern {
    Pattern {
        nodes,
        edges,
        ports,
        hgroups,
    }
}

/// A scalar-√2 island: a degree-1 phase-π spider wired to a degree-1 phase-0
/// spider of the other color. Its value is √2 under every interpretation.
fn dumbbell(nodes: &mut Vec<PatNode>, edges: &mut Vec<(usize, usize)>, first: PatColor) {
    let i = nodes.len();
    let second = match first {
        PatColor::Green => red(),
        PatColor::Red => green(),
    };
    nodes.push(spider(first, cpi(), vec![]));
    nodes.push(spider(second, c0(), vec![]));
    edges.push((i, i + 1));
}

fn fusion_rule(name: &str, color: PatColor) -> RewriteRule {
    let lhs = pattern(
        vec![
            spider(color, PhaseExpr::var(0), vec![0]),
            spider(color, PhaseExpr::var(1), vec![1]),
        ],
        vec![(0, 1)],
        vec![],
        vec![],
    );
    let rhs = pattern(
        vec![spider(color, PhaseExpr::sum(0, 1), vec![0, 1])],
        vec![],
        vec![],
        vec![],
    );
    RewriteRule::new(name, lhs, rhs, CompareMode::Exact, 2)
}

fn identity_rule(name: &str, color: PatColor) -> RewriteRule {
    let lhs = pattern(
        vec![spider(color, c0(), vec![]), PatNode::Port, PatNode::Port],
        vec![(1, 0), (0, 2)],
        vec![1, 2],
        vec![],
    );
    let rhs = pattern(
        vec![PatNode::Port, PatNode::Port],
        vec![(0, 1)],
        vec![0, 1],
        vec![],
    );
    RewriteRule::new(name, lhs, rhs, CompareMode::Exact, 0)
}

fn copy_rule(name: &str, copier: PatColor) -> RewriteRule {
    let state = match copier {
        PatColor::Green => red(),
        PatColor::Red => green(),
    };
    let mut nodes = Vec::new();
    let mut edges = Vec::new();
    dumbbell(&mut nodes, &mut edges, copier);
    let s = nodes.len();
    nodes.push(spider(state, c0(), vec![]));
    nodes.push(spider(copier, c0(), vec![]));
    nodes.push(PatNode::Port);
    nodes.push(PatNode::Port);
    edges.push((s, s + 1));
    edges.push((s + 1, s + 2));
    edges.push((s + 1, s + 3));
    let lhs = pattern(nodes, edges, vec![s + 2, s + 3], vec![]);
    let rhs = pattern(
        vec![
            spider(state, c0(), vec![]),
            PatNode::Port,
            spider(state, c0(), vec![]),
            PatNode::Port,
        ],
        vec![(0, 1), (2, 3)],
        vec![1, 3],
        vec![],
    );
    RewriteRule::new(name, lhs, rhs, CompareMode::Exact, 0)
}

fn bialgebra_rule() -> RewriteRule {
    let mut nodes = Vec::new();
    let mut edges = Vec::new();
    dumbbell(&mut nodes, &mut edges, green());
    let za = nodes.len();
    nodes.push(spider(green(), c0(), vec![]));
    nodes.push(spider(green(), c0(), vec![]));
    nodes.push(spider(red(), c0(), vec![]));
    nodes.push(spider(red(), c0(), vec![]));
    let (zb, xc, xd) = (za + 1, za + 2, za + 3);
    edges.extend([(za, xc), (za, xd), (zb, xc), (zb, xd)]);
    let p = nodes.len();
    nodes.extend([PatNode::Port, PatNode::Port, PatNode::Port, PatNode::Port]);
    edges.extend([(p, za), (p + 1, zb), (p + 2, xc), (p + 3, xd)]);
    let lhs = pattern(nodes, edges, vec![p, p + 1, p + 2, p + 3], vec![]);
    let rhs = pattern(
        vec![
            spider(red(), c0(), vec![]),
            spider(green(), c0(), vec![]),
            PatNode::Port,
            PatNode::Port,
            PatNode::Port,
            PatNode::Port,
        ],
        vec![(0, 1), (2, 0), (3, 0), (4, 1), (5, 1)],
        vec![2, 3, 4, 5],
        vec![],
    );
    RewriteRule::new("B2", lhs, rhs, CompareMode::Exact, 0)
}

fn pi_commute_rule(name: &str, through: PatColor) -> RewriteRule {
    let pi_color = match through {
        PatColor::Green => red(),
        PatColor::Red => green(),
    };
    let lhs = pattern(
        vec![
            spider(through, PhaseExpr::var(0), vec![]),
            spider(pi_color, cpi(), vec![]),
            PatNode::Port,
            PatNode::Port,
        ],
        vec![(2, 0), (0, 1), (1, 3)],
        vec![2, 3],
        vec![],
    );
    let rhs = pattern(
        vec![
            spider(pi_color, cpi(), vec![]),
            spider(through, PhaseExpr::neg_var(0), vec![]),
            PatNode::Port,
            PatNode::Port,
        ],
        vec![(2, 0), (0, 1), (1, 3)],
        vec![2, 3],
        vec![],
    );
    RewriteRule::new(name, lhs, rhs, CompareMode::UpToGlobalPhase, 1)
}

fn pi_absorb_rule(name: &str, through: PatColor) -> RewriteRule {
    let state = match through {
        PatColor::Green => red(),
        PatColor::Red => green(),
    };
    let lhs = pattern(
        vec![
            spider(state, cpi(), vec![]),
            spider(through, PhaseExpr::var(0), vec![]),
            PatNode::Port,
        ],
        vec![(0, 1), (1, 2)],
        vec![2],
        vec![],
    );
    let rhs = pattern(
        vec![spider(state, cpi(), vec![]), PatNode::Port],
        vec![(0, 1)],
        vec![1],
        vec![],
    );
    RewriteRule::new(name, lhs, rhs, CompareMode::UpToGlobalPhase, 1)
}

fn color_change_rule() -> RewriteRule {
    let lhs = pattern(
        vec![spider(green(), PhaseExpr::var(0), vec![0])],
        vec![],
        vec![],
        vec![0],
    );
    let rhs = pattern(
        vec![spider(red(), PhaseExpr::var(0), vec![0])],
        vec![],
        vec![],
        vec![],
    );
    RewriteRule::new("C", lhs, rhs, CompareMode::Exact, 1)
}

fn euler_rule() -> RewriteRule {
    let lhs = pattern(
        vec![PatNode::HBox, PatNode::Port, PatNode::Port],
        vec![(1, 0), (0, 2)],
        vec![1, 2],
        vec![],
    );
    let rhs = pattern(
        vec![
            spider(green(), half_pi(), vec![]),
            spider(red(), half_pi(), vec![]),
            spider(green(), half_pi(), vec![]),
            PatNode::Port,
            PatNode::Port,
        ],
        vec![(3, 0), (0, 1), (1, 2), (2, 4)],
        vec![3, 4],
        vec![],
    );
    RewriteRule::new("EU", lhs, rhs, CompareMode::UpToGlobalPhase, 0)
}

fn circle_rule() -> RewriteRule {
    let lhs = pattern(vec![spider(green(), c0(), vec![])], vec![(0, 0)], vec![], vec![]);
    let rhs = pattern(vec![spider(green(), c0(), vec![])], vec![], vec![], vec![]);
    RewriteRule::new("D1", lhs, rhs, CompareMode::Exact, 0)
}

fn two_dumbbell_rule() -> RewriteRule {
    let mut nodes = Vec::new();
    let mut edges = Vec::new();
    dumbbell(&mut nodes, &mut edges, green());
    dumbbell(&mut nodes, &mut edges, green());
    let lhs = pattern(nodes, edges, vec![], vec![]);
    let rhs = pattern(vec![spider(green(), c0(), vec![])], vec![], vec![], vec![]);
    RewriteRule::new("D2", lhs, rhs, CompareMode::Exact, 0)
}

/// The double-Hadamard cancellation used by `simplify`; sound exactly, and
/// derivable from the library rules, so it is not listed among them.
pub(crate) fn hh_rule() -> RewriteRule {
    let lhs = pattern(
        vec![PatNode::HBox, PatNode::HBox, PatNode::Port, PatNode::Port],
        vec![(2, 0), (0, 1), (1, 3)],
        vec![2, 3],
        vec![],
    );
    let rhs = pattern(
        vec![PatNode::Port, PatNode::Port],
        vec![(0, 1)],
        vec![0, 1],
        vec![],
    );
    RewriteRule::new("HH", lhs, rhs, CompareMode::Exact, 0)
}

/// The rule library: spider fusion (S1), identity removal (S2), state copy
/// (B1), bialgebra (B2), π-commutation (K1), π-state absorption (K2), color
/// change (C), the Euler decomposition of the Hadamard (EU), and the scalar
/// rules for the circle (D1) and the dumbbell pair (D2). The `g`/`r` suffix
/// names the green- and red-anchored variants.
pub fn builtin_rules() -> Vec<RewriteRule> {
    vec![
        fusion_rule("S1g", green()),
        fusion_rule("S1r", red()),
        identity_rule("S2g", green()),
        identity_rule("S2r", red()),
        copy_rule("B1g", green()),
        copy_rule("B1r", red()),
        bialgebra_rule(),
        pi_commute_rule("K1g", green()),
        pi_commute_rule("K1r", red()),
        pi_absorb_rule("K2g", green()),
        pi_absorb_rule("K2r", red()),
        color_change_rule(),
        euler_rule(),
        circle_rule(),
        two_dumbbell_rule(),
    ]
}

/// Rewrites to a normal form under spider fusion, identity-spider removal,
/// and double-Hadamard cancellation, applied left to right until none fits.
/// Every step removes at least one node, so this terminates.
pub fn simplify(d: &Diagram) -> Result<Diagram, RuleError> {
    let rules: Vec<RewriteRule> = vec![
        fusion_rule("S1g", green()),
        fusion_rule("S1r", red()),
        identity_rule("S2g", green()),
        identity_rule("S2r", red()),
        hh_rule(),
    ];
    let mut cur = d.clone();
    'outer: loop {
        for rule in &rules {
            let matches = find_matches(&cur, rule, Direction::Forward);
            if let Some(m) = matches.first() {
                cur = apply(&cur, rule, m)?;
                continue 'outer;
            }
        }
        return Ok(cur);
    }
}
