//! Structural properties checked over randomized diagrams: serialization
//! round trips, the algebra of tensor/compose/reverse/color-swap against the
//! matrix model, matcher invariance under relabeling, and simplifier
//! soundness.

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use zx::diagram::{Diagram, NodeKind};
use zx::matrix::{compare, CompareMode};
use zx::phase::Phase;
use zx::rules::{builtin_rules, find_matches, simplify, Direction};
use zx::semantics::{hadamard_matrix, interpret, Model};
use zx::ComplexMatrix;

/// A small random diagram with up to two boundaries per side.
fn diagram_from_seed(seed: u64) -> Diagram {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut d = Diagram::new();
    let spiders = rng.gen_range(1..=5usize);
    let mut ids = Vec::new();
    for _ in 0..spiders {
        let p = Phase::radians(rng.gen_range(0.0..std::f64::consts::TAU));
        ids.push(d.add_node(if rng.gen() {
            NodeKind::Z(p)
        } else {
            NodeKind::X(p)
        }));
    }
    for _ in 0..rng.gen_range(0..=2usize) {
        let b = d.add_node(NodeKind::B);
        d.add_edge(b, ids[rng.gen_range(0..ids.len())]);
        d.mark_input(b);
    }
    for _ in 0..rng.gen_range(0..=2usize) {
        let b = d.add_node(NodeKind::B);
        d.add_edge(ids[rng.gen_range(0..ids.len())], b);
        d.mark_output(b);
    }
    for _ in 0..rng.gen_range(0..=4usize) {
        let a = ids[rng.gen_range(0..ids.len())];
        let b = ids[rng.gen_range(0..ids.len())];
        if d.degree(a) < 4 && d.degree(b) < 4 {
            d.add_edge(a, b);
        }
    }
    d
}

/// A 1 → 1 chain with occasional Hadamard boxes and chords.
fn one_one_from_seed(seed: u64) -> Diagram {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut d = Diagram::new();
    let input = d.add_node(NodeKind::B);
    let mut prev = input;
    let mut spine = Vec::new();
    for _ in 0..rng.gen_range(1..=4usize) {
        let p = Phase::radians(rng.gen_range(0.0..std::f64::consts::TAU));
        let kind = match rng.gen_range(0..3) {
            0 => NodeKind::Z(p),
            1 => NodeKind::X(p),
            _ => NodeKind::H,
        };
        let s = d.add_node(kind);
        d.add_edge(prev, s);
        prev = s;
        if !matches!(kind, NodeKind::H) {
            spine.push(s);
        }
    }
    let output = d.add_node(NodeKind::B);
    d.add_edge(prev, output);
    d.mark_input(input);
    d.mark_output(output);
    if spine.len() >= 2 && rng.gen_bool(0.4) {
        let a = spine[rng.gen_range(0..spine.len())];
        let b = spine[rng.gen_range(0..spine.len())];
        d.add_edge(a, b);
    }
    d
}

/// Rebuilds the diagram with nodes and edges inserted in a shuffled order.
fn relabeled(d: &Diagram, seed: u64) -> Diagram {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<_> = d.nodes().collect();
    order.shuffle(&mut rng);
    let mut out = Diagram::new();
    let mut map = std::collections::BTreeMap::new();
    for (id, kind) in &order {
        map.insert(*id, out.add_node(*kind));
    }
    let mut edges: Vec<_> = d.edges().to_vec();
    edges.shuffle(&mut rng);
    for (a, b) in edges {
        out.add_edge(map[&a], map[&b]);
    }
    for id in d.inputs() {
        out.mark_input(map[id]);
    }
    for id in d.outputs() {
        out.mark_output(map[id]);
    }
    out
}

fn kron_h(legs: usize) -> ComplexMatrix {
    let mut m = ComplexMatrix::identity(1);
    for _ in 0..legs {
        m = m.kron(&hadamard_matrix());
    }
    m
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn json_round_trip_preserves_structure(seed: u64) {
        let d = diagram_from_seed(seed);
        let text = d.to_json();
        let back = Diagram::from_json(&text).unwrap();
        prop_assert!(Diagram::is_isomorphic(&d, &back));
        // Serialization is canonical: a reparse emits the same bytes.
        prop_assert_eq!(back.to_json(), text);
    }

    #[test]
    fn tensor_interprets_as_kron(s1: u64, s2: u64) {
        let a = diagram_from_seed(s1);
        let b = diagram_from_seed(s2);
        let t = Diagram::tensor(&a, &b);
        let lhs = interpret(&t, Model::STANDARD).unwrap();
        let rhs = interpret(&a, Model::STANDARD)
            .unwrap()
            .kron(&interpret(&b, Model::STANDARD).unwrap());
        prop_assert!(lhs.distance(&rhs) <= 1e-9);
    }

    #[test]
    fn compose_interprets_as_mul(s1: u64, s2: u64) {
        let f = one_one_from_seed(s1);
        let g = one_one_from_seed(s2);
        let c = Diagram::compose(&f, &g).unwrap();
        let lhs = interpret(&c, Model::STANDARD).unwrap();
        let rhs = interpret(&f, Model::STANDARD)
            .unwrap()
            .mul(&interpret(&g, Model::STANDARD).unwrap());
        prop_assert!(lhs.distance(&rhs) <= 1e-9);
    }

    #[test]
    fn tensor_and_compose_interchange(s1: u64, s2: u64, s3: u64, s4: u64) {
        let a = one_one_from_seed(s1);
        let b = one_one_from_seed(s2);
        let c = one_one_from_seed(s3);
        let e = one_one_from_seed(s4);
        let wide = Diagram::compose(&Diagram::tensor(&a, &b), &Diagram::tensor(&c, &e)).unwrap();
        let deep = Diagram::tensor(
            &Diagram::compose(&a, &c).unwrap(),
            &Diagram::compose(&b, &e).unwrap(),
        );
        let lhs = interpret(&wide, Model::STANDARD).unwrap();
        let rhs = interpret(&deep, Model::STANDARD).unwrap();
        prop_assert!(lhs.distance(&rhs) <= 1e-9);
    }

    #[test]
    fn reversal_interprets_as_dagger(seed: u64) {
        let d = diagram_from_seed(seed);
        let lhs = interpret(&d.reversed(), Model::STANDARD).unwrap();
        let rhs = interpret(&d, Model::STANDARD).unwrap().dagger();
        prop_assert!(lhs.distance(&rhs) <= 1e-9);
    }

    #[test]
    fn color_swap_conjugates_by_hadamard(seed: u64) {
        let d = diagram_from_seed(seed);
        let m = interpret(&d, Model::STANDARD).unwrap();
        let swapped = interpret(&d.color_swap_all(), Model::STANDARD).unwrap();
        let conj = kron_h(d.outputs().len())
            .mul(&m)
            .mul(&kron_h(d.inputs().len()));
        prop_assert!(swapped.distance(&conj) <= 1e-9);
    }

    #[test]
    fn relabeling_preserves_match_counts(seed: u64, shuffle_seed: u64) {
        let d = diagram_from_seed(seed);
        let r = relabeled(&d, shuffle_seed);
        prop_assert!(Diagram::is_isomorphic(&d, &r));
        for rule in builtin_rules() {
            for dir in [Direction::Forward, Direction::Reverse] {
                let n1 = find_matches(&d, &rule, dir).len();
                let n2 = find_matches(&r, &rule, dir).len();
                prop_assert_eq!(n1, n2, "{} {:?}", rule.name, dir);
            }
        }
    }

    #[test]
    fn simplify_is_sound_and_idempotent(seed: u64) {
        let d = diagram_from_seed(seed);
        let s = simplify(&d).unwrap();
        prop_assert!(s.validate().is_empty());
        prop_assert!(s.node_count() <= d.node_count());
        let before = interpret(&d, Model::STANDARD).unwrap();
        let after = interpret(&s, Model::STANDARD).unwrap();
        let eq = compare(&before, &after, CompareMode::Exact, 1e-7).unwrap();
        prop_assert!(eq.equivalent, "residual {:.3e}", eq.residual);
        let ss = simplify(&s).unwrap();
        prop_assert!(Diagram::is_isomorphic(&s, &ss));
    }
}
