//! Search for diagram pairs that are equal standardly but split by an
//! angle-multiplied interpretation.
//!
//! The enumerator produces a systematic core of small diagrams over a phase
//! alphabet (single spiders, Hadamard, alternating spider chains) plus a
//! seeded random tail. Interpretations are fingerprinted up to global phase;
//! within each fingerprint bucket, genuinely phase-equal pairs are probed
//! with angle multipliers congruent to 1 mod 4, the sound ones, and any pair
//! a probe pushes past the separation floor is reported as a gap candidate.

use crate::diagram::{Diagram, DiagramDoc, DiagramError, NodeKind};
use crate::incompleteness::{verify_pair, CertError, PairCheck};
use crate::matrix::{compare, CompareMode, ComplexMatrix, MatrixError};
use crate::phase::Phase;
use crate::semantics::{interpret, Model, SemanticsError, DEFAULT_MAX_WIRES};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("probe multiplier {0} is not congruent to 1 mod 4, so it is not sound; use ..., -7, -3, 1, 5, 9, ...")]
    BadProbe(i64),
    #[error("boundary signatures differ: {lhs} vs {rhs}")]
    SignatureMismatch { lhs: String, rhs: String },
    #[error("too many boundary wires: {0} per side exceeds {1}")]
    TooWide(usize, usize),
    #[error(transparent)]
    Semantics(#[from] SemanticsError),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error(transparent)]
    Cert(#[from] CertError),
    #[error(transparent)]
    Diagram(#[from] DiagramError),
}

/// Search space and probing parameters.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchConfig {
    /// Maximum spiders and Hadamard boxes per diagram.
    pub node_budget: usize,
    pub inputs: usize,
    pub outputs: usize,
    /// Phases available to enumerated spiders.
    pub alphabet: Vec<Phase>,
    /// Angle multipliers to probe; each must be ≡ 1 (mod 4).
    pub probes: Vec<i64>,
    pub tolerance: f64,
    pub separation_floor: f64,
    pub seed: u64,
    /// Drop isomorphic duplicates from the enumeration.
    pub dedup: bool,
    /// Cap on the number of enumerated diagrams.
    pub max_diagrams: usize,
}

impl Default for SearchConfig {
    fn default() -> SearchConfig {
        SearchConfig {
            node_budget: 3,
            inputs: 1,
            outputs: 1,
            alphabet: vec![
                Phase::ZERO,
                Phase::rational(1, 2),
                Phase::PI,
                Phase::rational(3, 2),
            ],
            probes: vec![-3, 5],
            tolerance: 1e-9,
            separation_floor: 0.1,
            seed: 1,
            dedup: true,
            max_diagrams: 256,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<(), SearchError> {
        for &p in &self.probes {
            if p.rem_euclid(4) != 1 {
                return Err(SearchError::BadProbe(p));
            }
        }
        let widest = self.inputs.max(self.outputs);
        if widest > DEFAULT_MAX_WIRES {
            return Err(SearchError::TooWide(widest, DEFAULT_MAX_WIRES));
        }
        Ok(())
    }
}

/// A single spider with the configured boundary signature.
fn single_spider(green: bool, p: Phase, m: usize, n: usize) -> Diagram {
    let mut d = Diagram::new();
    let s = d.add_node(if green { NodeKind::Z(p) } else { NodeKind::X(p) });
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
    d
}

/// A 1 → 1 chain of spiders with alternating colors.
fn spider_chain(start_green: bool, phases: &[Phase]) -> Diagram {
    let mut d = Diagram::new();
    let input = d.add_node(NodeKind::B);
    let mut prev = input;
    let mut green = start_green;
    for &p in phases {
        let s = d.add_node(if green { NodeKind::Z(p) } else { NodeKind::X(p) });
        d.add_edge(prev, s);
        prev = s;
        green = !green;
    }
    let output = d.add_node(NodeKind::B);
    d.add_edge(prev, output);
    d.mark_input(input);
    d.mark_output(output);
    d
}

fn bare_wires(m: usize) -> Diagram {
    let mut d = Diagram::new();
    for _ in 0..m {
        let bi = d.add_node(NodeKind::B);
        let bo = d.add_node(NodeKind::B);
        d.add_edge(bi, bo);
        d.mark_input(bi);
        d.mark_output(bo);
    }
    d
}

fn random_diagram(cfg: &SearchConfig, rng: &mut ChaCha8Rng) -> Diagram {
    let spiders = rng.gen_range(1..=cfg.node_budget.max(1));
    let mut d = Diagram::new();
    let mut ids = Vec::new();
    for _ in 0..spiders {
        let p = cfg.alphabet[rng.gen_range(0..cfg.alphabet.len())];
        let green = rng.gen::<bool>();
        ids.push(d.add_node(if green { NodeKind::Z(p) } else { NodeKind::X(p) }));
    }
    for _ in 0..cfg.inputs {
        let b = d.add_node(NodeKind::B);
        d.add_edge(b, ids[rng.gen_range(0..ids.len())]);
        d.mark_input(b);
    }
    for _ in 0..cfg.outputs {
        let b = d.add_node(NodeKind::B);
        d.add_edge(ids[rng.gen_range(0..ids.len())], b);
        d.mark_output(b);
    }
    let extra = rng.gen_range(0..=spiders);
    for _ in 0..extra {
        let a = ids[rng.gen_range(0..ids.len())];
        let b = ids[rng.gen_range(0..ids.len())];
        d.add_edge(a, b);
    }
    d
}

/// Enumerates the search space deterministically: wires, the Hadamard box,
/// single spiders, alternating chains (1 → 1 only), then seeded random
/// diagrams up to the cap. Isolated zero-legged spiders are not enumerated;
/// scalar islands never help a candidate because probing compares up to a
/// scalar anyway.
pub fn enumerate_diagrams(cfg: &SearchConfig) -> Result<Vec<Diagram>, SearchError> {
    cfg.validate()?;
    let mut out: Vec<Diagram> = Vec::new();
    let push = |d: Diagram, out: &mut Vec<Diagram>| {
        if out.len() >= cfg.max_diagrams {
            return;
        }
        if !d.validate().is_empty() {
            return;
        }
        if cfg.dedup && out.iter().any(|e| Diagram::is_isomorphic(e, &d)) {
            return;
        }
        out.push(d);
    };

    if cfg.inputs == cfg.outputs && cfg.inputs > 0 {
        push(bare_wires(cfg.inputs), &mut out);
    }
    if cfg.node_budget >= 1 {
        if (cfg.inputs, cfg.outputs) == (1, 1) {
            let mut d = Diagram::new();
            let h = d.add_node(NodeKind::H);
            let bi = d.add_node(NodeKind::B);
            let bo = d.add_node(NodeKind::B);
            d.add_edge(bi, h);
            d.add_edge(h, bo);
            d.mark_input(bi);
            d.mark_output(bo);
            push(d, &mut out);
        }
        for &p in &cfg.alphabet {
            for green in [true, false] {
                push(single_spider(green, p, cfg.inputs, cfg.outputs), &mut out);
            }
        }
    }
    if (cfg.inputs, cfg.outputs) == (1, 1) {
        for len in 2..=cfg.node_budget {
            let mut stack: Vec<Vec<Phase>> = vec![Vec::new()];
            for _ in 0..len {
                let mut next = Vec::new();
                for prefix in &stack {
                    for &p in &cfg.alphabet {
                        let mut q = prefix.clone();
                        q.push(p);
                        next.push(q);
                    }
                }
                stack = next;
            }
            for phases in &stack {
                for start_green in [true, false] {
                    push(spider_chain(start_green, phases), &mut out);
                }
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut attempts = 0usize;
    while out.len() < cfg.max_diagrams && attempts < cfg.max_diagrams * 4 {
        attempts += 1;
        push(random_diagram(cfg, &mut rng), &mut out);
    }
    Ok(out)
}

/// A global-phase-invariant key for an interpretation.
///
/// Entries are normalized by the first entry whose magnitude is within 1e-9
/// of the maximum, then rounded to six decimals; equal-up-to-phase matrices
/// of the same shape map to the same key.
pub fn fingerprint(m: &ComplexMatrix) -> String {
    let max = m.max_abs();
    if max < 1e-12 {
        return format!("{}x{}:zero", m.rows(), m.cols());
    }
    let pivot = m
        .entries()
        .iter()
        .find(|e| e.norm() >= max - 1e-9)
        .copied()
        .expect("max comes from the entries");
    let mut key = format!("{}x{}:", m.rows(), m.cols());
    for e in m.entries() {
        let v = e / pivot;
        let re = (v.re * 1e6).round();
        let im = (v.im * 1e6).round();
        let re = if re == 0.0 { 0.0 } else { re };
        let im = if im == 0.0 { 0.0 } else { im };
        key.push_str(&format!("{re:.0},{im:.0};"));
    }
    key
}

/// A pair the search flagged: equal up to global phase standardly, pushed
/// past the separation floor by one of the probes.
#[derive(Clone, Debug, Serialize)]
pub struct GapCandidate {
    pub d1: DiagramDoc,
    pub d2: DiagramDoc,
    pub fingerprint: String,
    pub pair: PairCheck,
}

#[derive(Clone, Debug, Serialize)]
pub struct SearchReport {
    pub diagrams: usize,
    pub buckets: usize,
    pub pairs_compared: usize,
    pub candidates: Vec<GapCandidate>,
}

/// Runs the full search.
pub fn find_gaps(cfg: &SearchConfig) -> Result<SearchReport, SearchError> {
    cfg.validate()?;
    let diagrams = enumerate_diagrams(cfg)?;
    let standard: Vec<ComplexMatrix> = diagrams
        .iter()
        .map(|d| interpret(d, Model::STANDARD))
        .collect::<Result<_, _>>()?;

    let mut buckets: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (i, m) in standard.iter().enumerate() {
        buckets.entry(fingerprint(m)).or_default().push(i);
    }

    let mut pairs_compared = 0usize;
    let mut candidates: Vec<GapCandidate> = Vec::new();
    for (key, members) in &buckets {
        for (a, &i) in members.iter().enumerate() {
            for &j in &members[a + 1..] {
                if Diagram::is_isomorphic(&diagrams[i], &diagrams[j]) {
                    continue;
                }
                pairs_compared += 1;
                let eq = compare(
                    &standard[i],
                    &standard[j],
                    CompareMode::UpToGlobalPhase,
                    cfg.tolerance,
                )?;
                if !eq.equivalent {
                    continue;
                }
                for &k in &cfg.probes {
                    let pair = verify_pair(
                        &diagrams[i],
                        &diagrams[j],
                        k,
                        cfg.tolerance,
                        cfg.separation_floor,
                    )?;
                    if pair.certified {
                        candidates.push(GapCandidate {
                            d1: DiagramDoc::from(&diagrams[i]),
                            d2: DiagramDoc::from(&diagrams[j]),
                            fingerprint: key.clone(),
                            pair,
                        });
                        break;
                    }
                }
            }
        }
    }
    candidates.sort_by(|x, y| {
        y.pair
            .separation_residual
            .partial_cmp(&x.pair.separation_residual)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| {
                let dx = serde_json::to_string(&(&x.d1, &x.d2)).unwrap_or_default();
                let dy = serde_json::to_string(&(&y.d1, &y.d2)).unwrap_or_default();
                dx.cmp(&dy)
            })
    });
    Ok(SearchReport {
        diagrams: diagrams.len(),
        buckets: buckets.len(),
        pairs_compared,
        candidates,
    })
}

/// Result of probing one named fixture pair.
#[derive(Clone, Debug, Serialize)]
pub struct FixtureReport {
    pub name: String,
    pub equal_standard: bool,
    /// The first probe that separated the pair, if any.
    pub separated_at: Option<i64>,
    pub checks: Vec<PairCheck>,
}

/// Probes a known pair with every configured multiplier.
pub fn check_fixture_pair(
    name: &str,
    d1: &Diagram,
    d2: &Diagram,
    cfg: &SearchConfig,
) -> Result<FixtureReport, SearchError> {
    cfg.validate()?;
    let sig = |d: &Diagram| format!("{}→{}", d.inputs().len(), d.outputs().len());
    if d1.inputs().len() != d2.inputs().len() || d1.outputs().len() != d2.outputs().len() {
        return Err(SearchError::SignatureMismatch {
            lhs: sig(d1),
            rhs: sig(d2),
        });
    }
    let mut checks = Vec::new();
    let mut separated_at = None;
    let mut equal_standard = true;
    for &k in &cfg.probes {
        let pair = verify_pair(d1, d2, k, cfg.tolerance, cfg.separation_floor)?;
        equal_standard = pair.equal_standard;
        if separated_at.is_none() && pair.separates {
            separated_at = Some(k);
        }
        checks.push(pair);
    }
    Ok(FixtureReport {
        name: name.to_string(),
        equal_standard,
        separated_at,
        checks,
    })
}

/// Two built-in control pairs that are equal standardly and stay equal under
/// every sound multiplier, giving the probing machinery a negative baseline.
///
/// `hopf-dressed`: a double bond between phase-free spiders of opposite
/// colors with a circle island, against the disconnect into a green effect
/// and a red state. `fused-rails`: two π/4 green spiders on parallel wires
/// joined by a rung, against the single fused π/2 spider.
pub fn fixture_pairs() -> Vec<(String, Diagram, Diagram)> {
    let mut out = Vec::new();

    let mut lhs = Diagram::new();
    let z = lhs.add_node(NodeKind::Z(Phase::ZERO));
    let x = lhs.add_node(NodeKind::X(Phase::ZERO));
    let bi = lhs.add_node(NodeKind::B);
    let bo = lhs.add_node(NodeKind::B);
    lhs.add_edge(bi, z);
    lhs.add_edge(z, x);
    lhs.add_edge(z, x);
    lhs.add_edge(x, bo);
    lhs.mark_input(bi);
    lhs.mark_output(bo);
    let circle = lhs.add_node(NodeKind::Z(Phase::ZERO));
    lhs.add_edge(circle, circle);
    let mut rhs = Diagram::new();
    let z = rhs.add_node(NodeKind::Z(Phase::ZERO));
    let bi = rhs.add_node(NodeKind::B);
    rhs.add_edge(bi, z);
    rhs.mark_input(bi);
    let x = rhs.add_node(NodeKind::X(Phase::ZERO));
    let bo = rhs.add_node(NodeKind::B);
    rhs.add_edge(x, bo);
    rhs.mark_output(bo);
    out.push(("hopf-dressed".to_string(), lhs, rhs));

    let mut lhs = Diagram::new();
    let za = lhs.add_node(NodeKind::Z(Phase::rational(1, 4)));
    let zb = lhs.add_node(NodeKind::Z(Phase::rational(1, 4)));
    lhs.add_edge(za, zb);
    for s in [za, zb] {
        let bi = lhs.add_node(NodeKind::B);
        lhs.add_edge(bi, s);
        lhs.mark_input(bi);
    }
    for s in [za, zb] {
        let bo = lhs.add_node(NodeKind::B);
        lhs.add_edge(s, bo);
        lhs.mark_output(bo);
    }
    let rhs = single_spider(true, Phase::rational(1, 2), 2, 2);
    out.push(("fused-rails".to_string(), lhs, rhs));

    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::incompleteness;
    use num_complex::Complex64;

    #[test]
    fn probes_must_be_sound_multipliers() {
        let mut cfg = SearchConfig {
            probes: vec![-3, 5, 9, -7, 1],
            ..SearchConfig::default()
        };
        assert!(cfg.validate().is_ok());
        for bad in [0, 2, 3, 4, -1, -2, 7] {
            cfg.probes = vec![bad];
            assert!(
                matches!(cfg.validate(), Err(SearchError::BadProbe(_))),
                "{bad} accepted"
            );
        }
    }

    #[test]
    fn fingerprint_ignores_global_phase() {
        let m = ComplexMatrix::from_vec(
            2,
            2,
            vec![
                Complex64::new(0.3, 0.1),
                Complex64::new(-0.2, 0.0),
                Complex64::new(0.0, 0.9),
                Complex64::new(0.5, -0.5),
            ],
        )
        .unwrap();
        let rotated = m.scale(Complex64::from_polar(1.0, 1.234));
        assert_eq!(fingerprint(&m), fingerprint(&rotated));
        let other = m.scale(Complex64::new(2.0, 0.0));
        // A non-phase scalar changes nothing either: the pivot rescales it
        // away, which is fine because buckets are only a pre-filter.
        assert_eq!(fingerprint(&m), fingerprint(&other));
    }

    #[test]
    fn enumeration_is_deterministic_and_within_budget() {
        let cfg = SearchConfig {
            max_diagrams: 64,
            ..SearchConfig::default()
        };
        let a = enumerate_diagrams(&cfg).unwrap();
        let b = enumerate_diagrams(&cfg).unwrap();
        assert_eq!(a.len(), b.len());
        assert!(a.len() <= 64);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.to_json(), y.to_json());
        }
        for d in &a {
            assert!(d.validate().is_empty());
        }
    }

    #[test]
    fn stabilizer_alphabet_yields_no_candidates() {
        // Multiples of π/2 satisfy kθ ≡ θ (mod 2π) for every k ≡ 1 (mod 4),
        // so probing cannot tell any standard-equal pair apart.
        let cfg = SearchConfig {
            max_diagrams: 200,
            ..SearchConfig::default()
        };
        let report = find_gaps(&cfg).unwrap();
        assert!(report.diagrams > 50);
        assert!(report.pairs_compared > 0);
        assert!(
            report.candidates.is_empty(),
            "unexpected candidates: {}",
            report.candidates.len()
        );
    }

    #[test]
    fn counterexample_alphabet_rediscovers_the_gap() {
        let cfg = SearchConfig {
            node_budget: 3,
            alphabet: vec![
                Phase::rational(1, 3),
                Phase::rational(2, 3),
                Phase::radians(incompleteness::alpha() - std::f64::consts::FRAC_PI_3),
                Phase::radians(incompleteness::beta()),
            ],
            probes: vec![-3],
            max_diagrams: 180,
            ..SearchConfig::default()
        };
        let report = find_gaps(&cfg).unwrap();
        assert!(!report.candidates.is_empty(), "no gap found");
        let (c1, c2) = incompleteness::build_chains();
        let found = report.candidates.iter().any(|c| {
            let d1 = Diagram::try_from(c.d1.clone()).unwrap();
            let d2 = Diagram::try_from(c.d2.clone()).unwrap();
            (Diagram::is_isomorphic(&d1, &c1) && Diagram::is_isomorphic(&d2, &c2))
                || (Diagram::is_isomorphic(&d1, &c2) && Diagram::is_isomorphic(&d2, &c1))
        });
        assert!(found, "the known chain pair is absent from the candidates");
        for c in &report.candidates {
            assert!(c.pair.separation_residual >= 0.1);
            assert!(c.pair.equal_standard);
        }
    }

    #[test]
    fn candidates_replay_from_their_documents() {
        let cfg = SearchConfig {
            node_budget: 3,
            alphabet: vec![
                Phase::rational(1, 3),
                Phase::rational(2, 3),
                Phase::radians(incompleteness::alpha() - std::f64::consts::FRAC_PI_3),
                Phase::radians(incompleteness::beta()),
            ],
            probes: vec![-3],
            max_diagrams: 180,
            ..SearchConfig::default()
        };
        let report = find_gaps(&cfg).unwrap();
        let c = report.candidates.first().expect("candidates exist");
        let d1 = Diagram::try_from(c.d1.clone()).unwrap();
        let d2 = Diagram::try_from(c.d2.clone()).unwrap();
        let again = verify_pair(&d1, &d2, c.pair.k, cfg.tolerance, cfg.separation_floor).unwrap();
        assert!(again.certified);
        assert!((again.separation_residual - c.pair.separation_residual).abs() < 1e-12);
    }

    #[test]
    fn fixtures_stay_equal_under_all_probes() {
        let cfg = SearchConfig::default();
        for (name, d1, d2) in fixture_pairs() {
            let report = check_fixture_pair(&name, &d1, &d2, &cfg).unwrap();
            assert!(report.equal_standard, "{name} not equal standardly");
            assert_eq!(report.separated_at, None, "{name} separated unexpectedly");
            for check in &report.checks {
                assert!(check.standard_exact_ok, "{name} not exactly equal");
            }
        }
    }

    #[test]
    fn signature_mismatch_is_an_error() {
        let cfg = SearchConfig::default();
        let (_, d1, _) = fixture_pairs().remove(0);
        let (_, _, r2) = fixture_pairs().remove(1);
        assert!(matches!(
            check_fixture_pair("bad", &d1, &r2, &cfg),
            Err(SearchError::SignatureMismatch { .. })
        ));
    }
}
