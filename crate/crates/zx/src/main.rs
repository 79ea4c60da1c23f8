//! Command-line front end for the ZX engine.
//!
//! Exit codes: 0 on success, 1 when a check answers "no" (sides not
//! equivalent, a rule unsound, a certificate not certified), 2 on usage or
//! input errors.

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::{Path, PathBuf};
use zx::euler::{self, EulerOrder, EulerTriple};
use zx::incompleteness;
use zx::matrix::MatrixDoc;
use zx::rules::{builtin_rules, simplify};
use zx::search::{check_fixture_pair, find_gaps, fixture_pairs, SearchConfig};
use zx::soundness::{check_rules, SampleSpec};
use zx::{compare, interpret, CompareMode, ComplexMatrix, Diagram, Model, Phase};

#[derive(Parser)]
#[command(name = "zx", version, about = "ZX diagram evaluator, rewrite checker, and gap search")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Evaluate a diagram file to its matrix.
    Eval {
        /// Diagram JSON file.
        file: PathBuf,
        /// Angle multiplier of the interpretation.
        #[arg(long, default_value_t = 1, allow_negative_numbers = true)]
        k: i64,
        /// Emit the matrix as JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
    /// Compare two diagram files under an interpretation.
    Equal {
        a: PathBuf,
        b: PathBuf,
        /// Equivalence notion to test.
        #[arg(long, value_enum, default_value_t = ModeArg::Phase)]
        mode: ModeArg,
        #[arg(long, default_value_t = 1, allow_negative_numbers = true)]
        k: i64,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Rewrite a diagram to its simplified normal form.
    Simplify {
        file: PathBuf,
        /// Write the result here instead of stdout.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Check every built-in rewrite rule against its declared equivalence.
    RulesCheck {
        /// Angle multipliers to check under; repeatable.
        #[arg(long = "k", default_values_t = [1i64], allow_negative_numbers = true)]
        ks: Vec<i64>,
        /// Random phase bindings per rule on top of the grid.
        #[arg(long, default_value_t = 50)]
        samples: usize,
        #[arg(long, default_value_t = 0x5eed)]
        seed: u64,
        #[arg(long)]
        json: bool,
    },
    /// Verify the built-in pair of equal diagrams that a sound
    /// angle-multiplied interpretation separates, and print the certificate.
    IncompletenessCert {
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        /// Minimum residual for a probe to count as separating.
        #[arg(long, default_value_t = incompleteness::DEFAULT_SEPARATION_FLOOR)]
        floor: f64,
        #[arg(long)]
        json: bool,
    },
    /// Convert between a 2x2 unitary and a phase-gate triple.
    Euler {
        /// Gate order of the triple.
        #[arg(long, value_enum)]
        order: OrderArg,
        /// Matrix JSON file to decompose into a triple.
        #[arg(long, conflicts_with = "triple", required_unless_present = "triple")]
        matrix: Option<PathBuf>,
        /// Triple JSON file to recompose into a matrix.
        #[arg(long)]
        triple: Option<PathBuf>,
        /// Emit the equivalent spider-chain diagram instead.
        #[arg(long)]
        emit_diagram: bool,
    },
    /// Enumerate small diagrams and hunt for standard-equal pairs that some
    /// sound angle multiplier separates.
    Search {
        /// Search configuration JSON; defaults cover a stabilizer alphabet.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Probe the built-in control pairs instead of enumerating.
        #[arg(long)]
        fixtures: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Exact,
    Phase,
    Scalar,
}

impl From<ModeArg> for CompareMode {
    fn from(m: ModeArg) -> CompareMode {
        match m {
            ModeArg::Exact => CompareMode::Exact,
            ModeArg::Phase => CompareMode::UpToGlobalPhase,
            ModeArg::Scalar => CompareMode::UpToNonzeroScalar,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum OrderArg {
    Zxz,
    Xzx,
}

impl From<OrderArg> for EulerOrder {
    fn from(o: OrderArg) -> EulerOrder {
        match o {
            OrderArg::Zxz => EulerOrder::Zxz,
            OrderArg::Xzx => EulerOrder::Xzx,
        }
    }
}

/// On-disk triple format; angles are radians.
#[derive(Serialize, Deserialize)]
struct TripleDoc {
    order: String,
    alpha: f64,
    beta: f64,
    gamma: f64,
    global_phase: f64,
}

impl From<&EulerTriple> for TripleDoc {
    fn from(t: &EulerTriple) -> TripleDoc {
        TripleDoc {
            order: t.order.to_string(),
            alpha: t.alpha.to_radians(),
            beta: t.beta.to_radians(),
            gamma: t.gamma.to_radians(),
            global_phase: t.global_phase.to_radians(),
        }
    }
}

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => std::process::exit(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            std::process::exit(2);
        }
    }
}

fn load_diagram(path: &Path) -> Result<Diagram> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    Diagram::from_json(&text).with_context(|| format!("parsing {}", path.display()))
}

fn load_matrix(path: &Path) -> Result<ComplexMatrix> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let doc: MatrixDoc =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    ComplexMatrix::try_from(doc).with_context(|| format!("validating {}", path.display()))
}

fn emit(text: String, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text + "\n")
            .with_context(|| format!("writing {}", path.display())),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn fmt_complex(z: Complex64) -> String {
    format!("{:.6}{:+.6}i", z.re, z.im)
}

fn print_matrix(m: &ComplexMatrix) {
    let cells: Vec<String> = m.entries().iter().map(|&z| fmt_complex(z)).collect();
    let width = cells.iter().map(|s| s.len()).max().unwrap_or(0);
    for r in 0..m.rows() {
        let row: Vec<String> = (0..m.cols())
            .map(|c| format!("{:>width$}", cells[r * m.cols() + c]))
            .collect();
        println!("[ {} ]", row.join("  "));
    }
}

fn run(cli: Cli) -> Result<i32> {
    match cli.cmd {
        Cmd::Eval { file, k, json } => {
            let d = load_diagram(&file)?;
            let m = interpret(&d, Model::new(k))?;
            if json {
                println!("{}", serde_json::to_string_pretty(&MatrixDoc::from(&m))?);
            } else {
                println!(
                    "{} inputs, {} outputs, k={k}: {}x{} matrix",
                    d.inputs().len(),
                    d.outputs().len(),
                    m.rows(),
                    m.cols()
                );
                print_matrix(&m);
            }
            Ok(0)
        }
        Cmd::Equal { a, b, mode, k, tol } => {
            let da = load_diagram(&a)?;
            let db = load_diagram(&b)?;
            let model = Model::new(k);
            let ma = interpret(&da, model)?;
            let mb = interpret(&db, model)?;
            if ma.rows() != mb.rows() || ma.cols() != mb.cols() {
                println!(
                    "not equivalent: shapes differ, {}x{} vs {}x{}",
                    ma.rows(),
                    ma.cols(),
                    mb.rows(),
                    mb.cols()
                );
                return Ok(1);
            }
            let eq = compare(&ma, &mb, mode.into(), tol)?;
            if eq.equivalent {
                println!(
                    "equivalent ({}, k={k}, residual={:.3e}, witness={})",
                    eq.mode,
                    eq.residual,
                    fmt_complex(eq.witness)
                );
                Ok(0)
            } else {
                println!(
                    "not equivalent ({}, k={k}, residual={:.3e})",
                    eq.mode, eq.residual
                );
                Ok(1)
            }
        }
        Cmd::Simplify { file, out } => {
            let d = load_diagram(&file)?;
            let s = simplify(&d)?;
            eprintln!("{} nodes -> {} nodes", d.node_count(), s.node_count());
            emit(s.to_json(), out.as_deref())?;
            Ok(0)
        }
        Cmd::RulesCheck { ks, samples, seed, json } => {
            let spec = SampleSpec {
                seed,
                random_samples: samples,
            };
            let report = check_rules(&builtin_rules(), &ks, &spec)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&report)?);
            } else {
                for check in &report.checks {
                    let verdict = if check.passes_declared() {
                        "PASS".to_string()
                    } else {
                        format!("FAIL worst_residual={:.3e}", check.worst_residual())
                    };
                    println!(
                        "{:4} k={:<3} declared={:<8} samples={:<4} {verdict}",
                        check.rule, check.k, check.declared.to_string(), check.samples
                    );
                }
            }
            let ok = report.checks.iter().all(|c| c.passes_declared());
            Ok(if ok { 0 } else { 1 })
        }
        Cmd::IncompletenessCert { tol, floor, json } => {
            let cert = incompleteness::verify(tol, floor)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&cert)?);
            } else {
                println!(
                    "standard equality: exact residual {:.3e} (tol {tol:.1e})",
                    cert.pair.standard_exact_residual
                );
                println!(
                    "separation at k={}: scalar residual {:.9} (floor {floor})",
                    cert.separator_k, cert.pair.separation_residual
                );
                println!(
                    "chain identity at k={}: distance {:.3e}",
                    cert.separator_k, cert.chain_identity_distance
                );
                println!(
                    "standard guard: residual {:.3e} stays below the floor",
                    cert.standard_guard_residual
                );
                println!("certified: {}", cert.certified);
            }
            Ok(if cert.certified { 0 } else { 1 })
        }
        Cmd::Euler { order, matrix, triple, emit_diagram } => {
            let t: EulerTriple = match (&matrix, &triple) {
                (Some(path), None) => {
                    let u = load_matrix(path)?;
                    euler::decompose(&u, order.into())
                        .with_context(|| format!("decomposing {}", path.display()))?
                }
                (None, Some(path)) => {
                    let text = fs::read_to_string(path)
                        .with_context(|| format!("reading {}", path.display()))?;
                    let doc: TripleDoc = serde_json::from_str(&text)
                        .with_context(|| format!("parsing {}", path.display()))?;
                    let want: EulerOrder = order.into();
                    if doc.order != want.to_string() {
                        bail!("triple order {} does not match --order {want}", doc.order);
                    }
                    EulerTriple {
                        order: want,
                        alpha: Phase::radians(doc.alpha),
                        beta: Phase::radians(doc.beta),
                        gamma: Phase::radians(doc.gamma),
                        global_phase: Phase::radians(doc.global_phase),
                    }
                }
                _ => bail!("pass exactly one of --matrix or --triple"),
            };
            if emit_diagram {
                let (d, scalar) = euler::as_diagram(&t);
                eprintln!("unitary = exp(i*{scalar}) * diagram");
                println!("{}", d.to_json());
            } else if matrix.is_some() {
                println!("{}", serde_json::to_string_pretty(&TripleDoc::from(&t))?);
            } else {
                let u = euler::recompose(&t);
                println!("{}", serde_json::to_string_pretty(&MatrixDoc::from(&u))?);
            }
            Ok(0)
        }
        Cmd::Search { config, out, fixtures } => {
            let cfg: SearchConfig = match &config {
                Some(path) => {
                    let text = fs::read_to_string(path)
                        .with_context(|| format!("reading {}", path.display()))?;
                    serde_json::from_str(&text)
                        .with_context(|| format!("parsing {}", path.display()))?
                }
                None => SearchConfig::default(),
            };
            if fixtures {
                let mut reports = Vec::new();
                for (name, d1, d2) in fixture_pairs() {
                    reports.push(check_fixture_pair(&name, &d1, &d2, &cfg)?);
                }
                for r in &reports {
                    eprintln!(
                        "{}: equal_standard={} separated_at={:?}",
                        r.name, r.equal_standard, r.separated_at
                    );
                }
                emit(serde_json::to_string_pretty(&reports)?, out.as_deref())?;
                return Ok(0);
            }
            let report = find_gaps(&cfg)?;
            eprintln!(
                "{} diagrams, {} buckets, {} pairs compared, {} candidates",
                report.diagrams,
                report.buckets,
                report.pairs_compared,
                report.candidates.len()
            );
            emit(serde_json::to_string_pretty(&report)?, out.as_deref())?;
            Ok(0)
        }
    }
}
