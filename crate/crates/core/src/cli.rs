//! Command-line front end. [`run`] maps an argument vector to an exit
//! status and the emitted text, so the binary stays a thin wrapper.
//!
//! Exit codes: 0 when the command ran and its check passed, 1 when a check
//! failed (a JSON report is still printed), 2 on usage or parse errors.

use std::fs;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::epfunc::EPFunction;
use crate::error::{Error, Result};
use crate::limits::Limits;
use crate::logic::{finite_ultrapower, index_tuple, lift_law_audit, los_check, parse_formula, FinitePrincipal, FiniteStructure};
use crate::ordinal::SmallOrdinal;
use crate::periodic::PeriodicSet;
use crate::rkorder::{order_export, rk_equiv_injective, rk_le_check, term_to_map, ExportFormat, RKVerdict, DEFAULT_BOUND};
use crate::skewlimit::{
    audit_stages, audit_triples, build_skew_system, check_coherence, check_welldef_limit, remark1_finite,
    remark1_witness, sample_payloads, verify_finite_chain, verify_omega_chain, welldef_choices, Carrier, FiniteChain,
    OmegaChain, OmegaSystem,
};
use crate::terms::{term_compare, SymbolicTerm};
use crate::ultrafilter::{axiom_suite, RepUltrafilter};

#[derive(Debug, Parser)]
#[command(name = "ultralimit", version, about = "Skew ultralimits on decidable carriers")]
struct Cli {
    /// Largest period any periodic object may reach.
    #[arg(long = "period-cap", global = true)]
    period_cap: Option<u64>,
    /// Write the document to this file instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CarrierKind {
    Finite,
    Omega,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Dot,
}

#[derive(Debug, clap::Args)]
struct UltrafilterArgs {
    /// Ultrafilter: principal:N, profinite:X, profinite:{m->r,..} or mapped:(u; f).
    #[arg(long)]
    u: Option<String>,
    /// Shorthand for --u profinite:N, or the principal point of a finite index set.
    #[arg(long)]
    point: Option<u64>,
}

impl UltrafilterArgs {
    fn omega(&self) -> Result<RepUltrafilter> {
        match (&self.u, self.point) {
            (Some(u), _) => u.parse(),
            (None, p) => Ok(RepUltrafilter::profinite_integer(p.unwrap_or(0))),
        }
    }

    fn index(&self, size: usize) -> Result<FinitePrincipal> {
        FinitePrincipal::new(size, self.point.unwrap_or(0) as usize)
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the canonical form of a periodic set.
    Canon {
        #[arg(long)]
        set: String,
    },
    /// Decide membership of a periodic set in an ultrafilter.
    Member {
        #[arg(long)]
        set: String,
        #[arg(long)]
        u: String,
    },
    /// Compare a formula in a finite ultrapower with its index-set meaning.
    LosCheck {
        /// Structure JSON, inline or a file path.
        structure: String,
        formula: String,
        #[command(flatten)]
        uf: UltrafilterArgs,
        /// Size of the index set.
        #[arg(long, default_value_t = 2)]
        k: usize,
        /// Largest number of assignments checked; beyond it they are sampled.
        #[arg(long, default_value_t = 4096)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Randomized audit of the lift laws over small universes.
    LiftLaws {
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Largest index-set size.
        #[arg(long, default_value_t = 3)]
        k: usize,
    },
    /// Build a direct system and describe its stages.
    Build {
        #[arg(long, value_enum, default_value_t = CarrierKind::Omega)]
        carrier: CarrierKind,
        #[command(flatten)]
        uf: UltrafilterArgs,
        /// The top stage, e.g. "w*1+2".
        #[arg(long, default_value = "w*1+2")]
        rank: String,
        /// Index-set size for the finite carrier.
        #[arg(long, default_value_t = 2)]
        k: usize,
        /// Structure JSON for the finite carrier, inline or a file path.
        structure: Option<String>,
    },
    /// Coherence and limit well-definedness audits of the symbolic system.
    #[command(name = "verify-def1")]
    VerifyDef1 {
        #[command(flatten)]
        uf: UltrafilterArgs,
        #[arg(long, default_value = "w*2+2")]
        rank: String,
        /// Number of sampled payloads.
        #[arg(long, default_value_t = 100)]
        samples: usize,
        /// Representative choices per thread.
        #[arg(long, default_value_t = 3)]
        choices: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Verify the diagrams of an elementary chain.
    VerifyChain {
        /// Chain JSON file; without it the carrier's standard chain is used.
        chain: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = CarrierKind::Finite)]
        carrier: CarrierKind,
        #[command(flatten)]
        uf: UltrafilterArgs,
        /// Chain length.
        #[arg(long, default_value_t = 3)]
        k: u64,
        /// Random payloads per stage on the symbolic carrier.
        #[arg(long, default_value_t = 50)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Separate the lifted diagonal from the diagonal.
    #[command(name = "witness-remark1")]
    WitnessRemark1 {
        #[arg(long, value_enum, default_value_t = CarrierKind::Omega)]
        carrier: CarrierKind,
        #[command(flatten)]
        uf: UltrafilterArgs,
        /// Index-set size for the finite carrier.
        #[arg(long, default_value_t = 2)]
        k: usize,
    },
    /// Compare two terms in the k-th iterated ultrapower of (ω, ≤).
    Compare {
        #[arg(long)]
        u: String,
        #[arg(long, default_value_t = 1)]
        k: u32,
        left: String,
        right: String,
    },
    /// Export the order of a sample of terms.
    OrderExport {
        #[arg(long, default_value = "profinite:0")]
        u: String,
        #[arg(long, default_value_t = 1)]
        k: u32,
        #[arg(long, value_enum, default_value_t = Format::Dot)]
        format: Format,
        terms: Vec<String>,
    },
    /// Check the ultrafilter laws on canonical and random sets.
    UfAxioms {
        #[arg(long)]
        u: String,
        /// Random prefixed sets beyond the exhaustive family.
        #[arg(long, default_value_t = 200)]
        samples: usize,
        /// Largest period of the exhaustive family.
        #[arg(long, default_value_t = 12)]
        bound: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Rudin–Keisler certificate for a candidate map (a map or a rank-1 term).
    RkCheck {
        #[arg(long)]
        u: String,
        /// Ultrafilter v: check `u = f_*(v)` instead of the injective equivalence.
        #[arg(long = "v", value_name = "V")]
        v: Option<String>,
        #[arg(long, default_value_t = DEFAULT_BOUND)]
        bound: u64,
        map: String,
    },
}

/// Which library operations each subcommand reaches.
pub const DISPATCH: &[(&str, &[&str])] = &[
    ("canon", &["periodic::parse", "periodic::canonicalize"]),
    ("member", &["ultrafilter::member", "ultrafilter::pushforward"]),
    ("los-check", &["logic::parse_formula", "logic::finite_ultrapower", "logic::los_check"]),
    ("lift-laws", &["logic::lift_map", "logic::compose_maps", "logic::lift_law_audit"]),
    ("build", &["skewlimit::build_skew_system", "skewlimit::embed", "skewlimit::finite_collapse_audit"]),
    (
        "verify-def1",
        &["skewlimit::check_coherence", "skewlimit::check_welldef_limit", "terms::term_compare"],
    ),
    ("verify-chain", &["skewlimit::verify_finite_chain", "skewlimit::verify_omega_chain"]),
    ("witness-remark1", &["skewlimit::remark1_witness", "terms::verdict_sets", "terms::embed_diagonal"]),
    ("compare", &["terms::parse", "terms::normalize", "terms::term_compare"]),
    ("order-export", &["rkorder::order_export"]),
    ("uf-axioms", &["ultrafilter::check_axioms", "periodic::combine"]),
    (
        "rk-check",
        &["rkorder::term_to_map", "rkorder::rk_le_check", "rkorder::rk_equiv_injective", "epfunc::left_inverse"],
    ),
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub exit: i32,
    pub stdout: String,
    pub stderr: String,
}

enum Doc {
    Text(String),
    Report { check: &'static str, passed: bool, witness: Option<Value>, report: Value },
}

fn report(check: &'static str, passed: bool, witness: Option<Value>, report: impl serde::Serialize) -> Result<Doc> {
    Ok(Doc::Report {
        check,
        passed,
        witness,
        report: serde_json::to_value(report).map_err(|e| Error::malformed(e.to_string()))?,
    })
}

fn read_structure(arg: &str) -> Result<FiniteStructure> {
    if arg.trim_start().starts_with('{') {
        return FiniteStructure::from_json(arg);
    }
    let text = fs::read_to_string(arg).map_err(|e| Error::malformed(format!("{arg}: {e}")))?;
    FiniteStructure::from_json(&text)
}

fn parse_map(text: &str) -> Result<EPFunction> {
    text.parse::<EPFunction>().or_else(|_| term_to_map(&text.parse::<SymbolicTerm>()?))
}

/// Runs one command line (`argv[0]` is the program name).
pub fn run<I, T>(argv: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let exit = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            return if exit == 0 {
                Outcome { exit, stdout: text, stderr: String::new() }
            } else {
                Outcome { exit, stdout: String::new(), stderr: text }
            };
        }
    };
    let mut limits = Limits::current();
    if let Some(cap) = cli.period_cap {
        if cap == 0 {
            return usage("--period-cap must be positive".into());
        }
        limits.period_cap = cap;
    }
    let doc = match limits.scoped(|| dispatch(cli.command)) {
        Ok(doc) => doc,
        Err(e @ Error::DiagramViolation { .. }) => Doc::Report {
            check: "verify-chain",
            passed: false,
            witness: Some(json!(e.to_string())),
            report: Value::Null,
        },
        Err(e) => return usage(e.to_string()),
    };
    let (exit, mut text) = match doc {
        Doc::Text(t) => (0, t),
        Doc::Report { check, passed, witness, report } => {
            let mut out = json!({"check": check, "status": if passed { "pass" } else { "fail" }});
            if let Some(w) = witness {
                out["witness"] = w;
            }
            if !report.is_null() {
                out["report"] = report;
            }
            (if passed { 0 } else { 1 }, serde_json::to_string_pretty(&out).expect("serializable"))
        }
    };
    if !text.ends_with('\n') {
        text.push('\n');
    }
    match cli.out {
        Some(path) => match fs::write(&path, &text) {
            Ok(()) => Outcome { exit, stdout: String::new(), stderr: String::new() },
            Err(e) => usage(format!("{}: {e}", path.display())),
        },
        None => Outcome { exit, stdout: text, stderr: String::new() },
    }
}

fn usage(message: String) -> Outcome {
    Outcome {
        exit: 2,
        stdout: String::new(),
        stderr: format!("error: {message}\n"),
    }
}

fn dispatch(command: Command) -> Result<Doc> {
    match command {
        Command::Canon { set } => Ok(Doc::Text(set.parse::<PeriodicSet>()?.to_string())),
        Command::Member { set, u } => {
            let u: RepUltrafilter = u.parse()?;
            Ok(Doc::Text(u.member(&set.parse()?)?.to_string()))
        }
        Command::LosCheck { structure, formula, uf, k, samples, seed } => {
            los_command(&read_structure(&structure)?, &formula, uf.index(k)?, samples, seed)
        }
        Command::LiftLaws { samples, seed, k } => {
            let r = lift_law_audit(4, k, samples, seed)?;
            let witness = r.failures.first().map(|f| json!(f));
            report("lift-laws", r.passed(), witness, &r)
        }
        Command::Build { carrier, uf, rank, k, structure } => {
            let alpha: SmallOrdinal = rank.parse()?;
            let carrier = match carrier {
                CarrierKind::Omega => Carrier::Omega { u: uf.omega()? },
                CarrierKind::Finite => Carrier::Finite {
                    structure: match structure {
                        Some(s) => read_structure(&s)?,
                        None => FiniteStructure::linear_order(3)?,
                    },
                    index: uf.index(k)?,
                },
            };
            let summary = build_skew_system(carrier, alpha)?.summary()?;
            let passed = summary.get("collapse_failures").is_none_or(|f| f == &json!([]));
            report("build", passed, None, summary)
        }
        Command::VerifyDef1 { uf, rank, samples, choices, seed } => {
            system_audit_command(uf.omega()?, rank.parse()?, samples, choices, seed)
        }
        Command::VerifyChain { chain, carrier, uf, k, samples, seed } => {
            let r = match (chain, carrier) {
                (Some(path), _) => {
                    let text = fs::read_to_string(&path).map_err(|e| Error::malformed(format!("{}: {e}", path.display())))?;
                    verify_finite_chain(&FiniteChain::from_json(&text)?)?
                }
                (None, CarrierKind::Finite) => {
                    verify_finite_chain(&FiniteChain::standard(&FiniteStructure::linear_order(3)?, uf.index(2)?, k)?)?
                }
                (None, CarrierKind::Omega) => verify_omega_chain(&OmegaChain::self_chain(uf.omega()?, k)?, samples, seed)?,
            };
            report("verify-chain", true, None, r)
        }
        Command::WitnessRemark1 { carrier, uf, k } => {
            let (r, expected) = match carrier {
                CarrierKind::Omega => (remark1_witness(&uf.omega()?)?, "separated"),
                CarrierKind::Finite => (remark1_finite(&FiniteStructure::linear_order(3)?, uf.index(k)?)?, "not_separated"),
            };
            let witness = json!({"g": r.g, "lifted": r.lifted_image, "diagonal": r.diagonal_image});
            Ok(Doc::Report {
                check: "witness-remark1",
                passed: r.status == expected,
                witness: Some(witness),
                report: serde_json::to_value(&r).expect("serializable"),
            })
        }
        Command::Compare { u, k, left, right } => {
            let u: RepUltrafilter = u.parse()?;
            let verdict = term_compare(&left.parse()?, &right.parse()?, &u, k)?;
            Ok(Doc::Text(format!("{verdict:?}")))
        }
        Command::OrderExport { u, k, format, terms } => {
            let u: RepUltrafilter = u.parse()?;
            let terms: Vec<SymbolicTerm> = if terms.is_empty() {
                default_export_terms(k)
            } else {
                terms.iter().map(|t| t.parse()).collect::<Result<_>>()?
            };
            let format = match format {
                Format::Dot => ExportFormat::Dot,
                Format::Json => ExportFormat::Json,
            };
            Ok(Doc::Text(order_export(&terms, &u, k, format)?))
        }
        Command::UfAxioms { u, samples, bound, seed } => {
            let r = axiom_suite(&u.parse()?, bound, samples, 50, seed)?;
            let witness = r.violations.first().map(|v| json!(v));
            report("uf-axioms", r.passed(), witness, &r)
        }
        Command::RkCheck { u, v, bound, map } => {
            let u: RepUltrafilter = u.parse()?;
            let f = parse_map(&map)?;
            match v {
                Some(v) => {
                    let v: RepUltrafilter = v.parse()?;
                    let holds = rk_le_check(&u, &v, &f, bound)?;
                    let detail = json!({"u": u.to_string(), "v": v.to_string(), "map": f.to_string(), "bound": bound});
                    let witness = (!holds).then(|| json!(v.pushforward(&f).map(|w| w.to_string()).unwrap_or_default()));
                    report("rk-le", holds, witness, detail)
                }
                None => {
                    let w = rk_equiv_injective(&f, &u, bound)?;
                    report("rk-equivalent", w.verdict == RKVerdict::Equivalent, None, &w)
                }
            }
        }
    }
}

fn default_export_terms(k: u32) -> Vec<SymbolicTerm> {
    let mut out: Vec<SymbolicTerm> = ["0", "1", "3", "v1", "v1 + 1", "2*v1", "case(2; v1 | v1 + 1 @ v1)"]
        .iter()
        .map(|t| t.parse().expect("built-in term"))
        .collect();
    for level in 2..=k {
        out.push(SymbolicTerm::Var(level));
        out.push(SymbolicTerm::sum(SymbolicTerm::Var(level), SymbolicTerm::Var(1)));
    }
    out
}

fn los_command(m: &FiniteStructure, formula: &str, a: FinitePrincipal, samples: usize, seed: u64) -> Result<Doc> {
    let phi = parse_formula(formula)?;
    phi.check_signature(m)?;
    let power = finite_ultrapower(m, a)?;
    let vars = phi.free_vars().iter().next_back().map_or(0, |v| v + 1);
    let per_var = m.size().pow(a.size as u32);
    let total = per_var.checked_pow(vars as u32).unwrap_or(usize::MAX);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let assignments: Vec<usize> = if total <= samples {
        (0..total).collect()
    } else {
        (0..samples).map(|_| rng.gen_range(0..total)).collect()
    };
    let mut checks = 0;
    for code in assignments {
        let gs: Vec<Vec<usize>> = index_tuple(per_var, vars, code)
            .into_iter()
            .map(|g| index_tuple(m.size(), a.size, g))
            .collect();
        checks += 1;
        if !los_check(m, &power, &phi, &gs)? {
            return report("los-check", false, Some(json!({"formula": phi.to_string(), "functions": gs})), json!({"checks": checks}));
        }
    }
    report(
        "los-check",
        true,
        None,
        json!({"formula": phi.to_string(), "index_size": a.size, "point": a.point, "checks": checks, "exhaustive": total <= samples}),
    )
}

fn system_audit_command(u: RepUltrafilter, alpha: SmallOrdinal, samples: usize, choices: usize, seed: u64) -> Result<Doc> {
    let system = OmegaSystem::skew(u, alpha)?;
    let stages = audit_stages(alpha);
    let per_stage = samples.div_ceil(stages.len()).max(1);
    let sample = sample_payloads(&system, &stages, per_stage, seed)?;
    let triples = audit_triples(alpha);
    let coherence = check_coherence(&system, &sample, &triples)?;
    let mut welldef = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xdef1);
    let threads = (samples / 10).max(1);
    for limit in stages.iter().copied().filter(|s| s.is_limit() && s.succ() <= alpha) {
        for _ in 0..threads {
            let thread = system.random_payload(&mut rng, limit, 3)?;
            let picks = welldef_choices(&system, &thread, choices)?;
            welldef.push(check_welldef_limit(&system, &thread, limit.succ(), &picks)?);
        }
    }
    let failing = welldef.iter().find(|r| !r.passed());
    let witness = coherence
        .failures
        .first()
        .map(|f| json!(f))
        .or_else(|| failing.map(|r| json!(r)));
    let passed = coherence.passed() && failing.is_none();
    report(
        "verify-def1",
        passed,
        witness,
        json!({
            "alpha": alpha.to_string(),
            "payloads": sample.len(),
            "triples": triples.len(),
            "coherence_checks": coherence.checks,
            "coherence_failures": coherence.failures.len(),
            "welldef_threads": welldef.len(),
            "welldef_comparisons": welldef.iter().map(|r| r.pairwise.len()).sum::<usize>(),
        }),
    )
}
