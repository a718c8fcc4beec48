//! Acceptance suite: one PASS/FAIL line per criterion. Each criterion
//! returns a JSON report; the last criterion reruns the others with the same
//! seed and compares the serialized reports byte for byte.

use std::cmp::Ordering;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use ultralimit::cli;
use ultralimit::epfunc::EPFunction;
use ultralimit::logic::{
    binary_relation_structures, lift_law_audit, los_sweep, FinitePrincipal, FiniteStructure, SweepConfig,
};
use ultralimit::ordinal::SmallOrdinal;
use ultralimit::rkorder::{random_injective, random_map, rk_equiv_injective, rk_le_check, RKVerdict, DEFAULT_BOUND};
use ultralimit::skewlimit::{
    audit_stages, build_skew_system, check_coherence, check_welldef_limit, finite_collapse_audit, sample_payloads,
    verify_finite_chain, verify_omega_chain, welldef_choices, Carrier, DirectSystem, FiniteChain, FiniteSystem,
    OmegaChain, DEFAULT_STAGE_CAP,
};
use ultralimit::terms::{embed_diagonal, embed_skew, random_term, term_compare, typical_verdict, verdict_sets, SymbolicTerm};
use ultralimit::ultrafilter::{axiom_suite, RepUltrafilter};
use ultralimit::Error;

const SEED: u64 = 2024;

type Outcome = Result<Value, String>;

fn o(a: u64, b: u64) -> SmallOrdinal {
    SmallOrdinal::new(a, b)
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn lib<T>(r: ultralimit::Result<T>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn timed(limit: Duration, f: impl FnOnce() -> Outcome) -> Outcome {
    let start = Instant::now();
    let report = f()?;
    let elapsed = start.elapsed();
    ensure(elapsed < limit, || format!("took {elapsed:?}, limit {limit:?}"))?;
    Ok(report)
}

fn los() -> Outcome {
    timed(Duration::from_secs(10), || {
        let config = SweepConfig {
            seed: SEED,
            ..SweepConfig::default()
        };
        let r = lib(los_sweep(&config))?;
        ensure(r.structures >= 200, || format!("only {} structures", r.structures))?;
        ensure(r.passed(), || format!("{} failures, first {:?}", r.failures.len(), r.failures.first()))?;
        Ok(json!({"structures": r.structures, "formulas": r.formulas, "checks": r.checks}))
    })
}

fn lift_laws() -> Outcome {
    let r = lib(lift_law_audit(4, 3, 1000, SEED))?;
    ensure(r.passed(), || format!("{:?}", r.failures.first()))?;
    Ok(json!({"pairs": 1000, "checks": r.checks}))
}

fn lifted_diagonal() -> Outcome {
    let mut reports = Vec::new();
    for args in [
        vec!["witness-remark1", "--point", "0"],
        vec!["witness-remark1", "--point", "1"],
        vec!["witness-remark1", "--carrier", "finite", "--point", "1"],
    ] {
        let argv = || std::iter::once("ultralimit").chain(args.iter().copied());
        let first = cli::run(argv());
        ensure(first.exit == 0, || format!("{args:?}: exit {} {}", first.exit, first.stderr))?;
        ensure(first == cli::run(argv()), || format!("{args:?} is not deterministic"))?;
        let v: Value = serde_json::from_str(&first.stdout).map_err(|e| e.to_string())?;
        reports.push(v);
    }
    for v in &reports[..2] {
        ensure(v["report"]["status"] == "separated" && v["report"]["equality_set"] == "0:1:{}:", || v.to_string())?;
    }
    ensure(reports[2]["report"]["status"] == "not_separated", || reports[2].to_string())?;
    Ok(json!(reports))
}

fn definition1() -> Outcome {
    timed(Duration::from_secs(30), || {
        let u = RepUltrafilter::profinite_integer(0);
        let (mut payloads, mut triples, mut checks, mut limit_crossing) = (0, 0, 0u64, 0);
        for alpha in [o(0, 2), o(0, 3), o(1, 0), o(1, 1), o(1, 2), o(2, 2)] {
            let DirectSystem::Omega(system) = lib(build_skew_system(Carrier::Omega { u: u.clone() }, alpha))? else {
                return Err("expected the symbolic carrier".into());
            };
            let mut stages = audit_stages(alpha);
            if !stages.contains(&alpha) {
                stages.push(alpha);
            }
            let mut all = Vec::new();
            for (i, &b) in stages.iter().enumerate() {
                for (j, &g) in stages.iter().enumerate().skip(i) {
                    for &d in &stages[j..] {
                        all.push((b, g, d));
                    }
                }
            }
            let sample = lib(sample_payloads(&system, &stages, 15, SEED))?;
            let r = lib(check_coherence(&system, &sample, &all))?;
            ensure(r.passed(), || format!("α = {alpha}: {:?}", r.failures.first()))?;
            payloads += sample.len();
            triples += all.len();
            checks += r.checks;
            limit_crossing += all.iter().filter(|(b, _, d)| b.limit_part() != d.limit_part()).count();
        }
        ensure(payloads >= 100 && triples >= 20 && limit_crossing > 0, || {
            format!("{payloads} payloads, {triples} triples, {limit_crossing} limit-crossing")
        })?;

        let system = lib(ultralimit::skewlimit::OmegaSystem::skew(u, o(2, 2)))?;
        let mut rng = ChaCha8Rng::seed_from_u64(SEED);
        let mut threads = 0;
        for limit in [o(1, 0), o(2, 0)] {
            for _ in 0..25 {
                let thread = lib(system.random_payload(&mut rng, limit, 3))?;
                let choices = lib(welldef_choices(&system, &thread, 4))?;
                ensure(choices.len() >= 3, || format!("{} choices for {thread}", choices.len()))?;
                let r = lib(check_welldef_limit(&system, &thread, limit.succ(), &choices))?;
                ensure(r.passed(), || serde_json::to_string(&r).unwrap_or_default())?;
                threads += 1;
            }
        }
        Ok(json!({
            "payloads": payloads,
            "triples": triples,
            "limit_crossing_triples": limit_crossing,
            "coherence_checks": checks,
            "welldef_threads": threads,
        }))
    })
}

fn collapse_structures() -> Result<Vec<FiniteStructure>, String> {
    let mut out = lib(binary_relation_structures(1))?;
    out.extend(lib(binary_relation_structures(2))?);
    out.push(lib(FiniteStructure::linear_order(3))?);
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    for _ in 0..6 {
        let holds = (0..9).map(|_| rng.gen_bool(0.5)).collect();
        let f = (0..3).map(|_| rng.gen_range(0..3)).collect();
        let m = lib(FiniteStructure::new(3)
            .and_then(|m| m.with_relation("R", 2, holds))
            .and_then(|m| m.with_function("f", 1, f))
            .and_then(|m| m.with_constant("c", rng.gen_range(0..3))))?;
        out.push(m);
    }
    Ok(out)
}

fn finite_collapse() -> Outcome {
    let stages: Vec<SmallOrdinal> = (0..=10).map(|k| o(0, k)).chain((0..=3).map(|k| o(1, k))).collect();
    let mut checks = 0;
    let structures = collapse_structures()?;
    for m in &structures {
        for index in [lib(FinitePrincipal::new(2, 1))?, lib(FinitePrincipal::new(3, 2))?] {
            let system = lib(FiniteSystem::new(m.clone(), index, o(1, 3), DEFAULT_STAGE_CAP))?;
            let r = lib(finite_collapse_audit(&system, &stages))?;
            ensure(r.passed(), || format!("{}: {:?}", m.to_json(), r.failures.first()))?;
            checks += r.checks;
        }
    }
    Ok(json!({"structures": structures.len(), "stages": stages.len(), "checks": checks}))
}

fn chains() -> Outcome {
    let mut checks = 0;
    let mut witnesses = Vec::new();
    for m in [lib(FiniteStructure::linear_order(3))?, lib(binary_relation_structures(2))?.swap_remove(5)] {
        let chain = lib(FiniteChain::standard(&m, lib(FinitePrincipal::new(2, 1))?, 3))?;
        checks += lib(verify_finite_chain(&chain))?.checks;
        for beta in 0..3 {
            let size = chain.isos[beta].len();
            for (i, j) in [(0, 1), (0, size - 1)] {
                let mut bad = chain.clone();
                bad.perturb_iso(beta, i, j);
                match verify_finite_chain(&bad) {
                    Err(Error::DiagramViolation { diagram, witness }) if !witness.is_empty() => {
                        witnesses.push(format!("{diagram}: {witness}"))
                    }
                    other => return Err(format!("perturbed ι_{beta} ({i} {j}) gave {other:?}")),
                }
            }
        }
    }
    let u = RepUltrafilter::profinite_integer(0);
    let chain = lib(OmegaChain::self_chain(u, 4))?;
    let r = lib(verify_omega_chain(&chain, 50, SEED))?;
    checks += r.checks;
    for beta in 0..4 {
        let mut bad = chain.clone();
        bad.perturb(beta, 4, 11);
        match verify_omega_chain(&bad, 50, SEED) {
            Err(Error::DiagramViolation { diagram, witness }) => witnesses.push(format!("{diagram}: {witness}")),
            other => return Err(format!("perturbed symbolic ι_{beta} gave {other:?}")),
        }
    }
    Ok(json!({"checks": checks, "omega_isomorphisms": r.isomorphisms, "violations": witnesses}))
}

fn order() -> Outcome {
    let u = RepUltrafilter::profinite_integer(0);
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let cmp = |a: &SymbolicTerm, b: &SymbolicTerm, k| lib(term_compare(a, b, &u, k));
    let mut tallies = [0usize; 3];
    for _ in 0..500 {
        let (t, s) = (random_term(&mut rng, 2, 2), random_term(&mut rng, 2, 2));
        let verdict = cmp(&t, &s, 2)?;
        ensure(verdict == lib(typical_verdict(&t, &s, &u, 2))?, || format!("{t} vs {s}: oracle disagrees"))?;
        let sets = lib(verdict_sets(&t, &s, &u, 2))?;
        ensure(lib(sets.is_partition())?, || format!("{t} vs {s}: verdict sets do not partition ω"))?;
        let in_u = [Ordering::Less, Ordering::Equal, Ordering::Greater]
            .into_iter()
            .filter(|&v| u.member(sets.get(v)).unwrap_or(false))
            .collect::<Vec<_>>();
        ensure(in_u == [verdict], || format!("{t} vs {s}: {in_u:?} vs {verdict:?}"))?;
        ensure(cmp(&s, &t, 2)? == verdict.reverse(), || format!("{t} vs {s}: not antisymmetric"))?;
        tallies[(verdict as i8 + 1) as usize] += 1;
    }
    for _ in 0..200 {
        let (t, s) = (random_term(&mut rng, 2, 2), random_term(&mut rng, 2, 2));
        let next = SymbolicTerm::sum(t.clone(), SymbolicTerm::Const(1));
        let strictly_between = cmp(&t, &s, 2)? == Ordering::Less && cmp(&s, &next, 2)? == Ordering::Less;
        ensure(!strictly_between, || format!("{s} lies strictly between {t} and {next}"))?;
    }
    let v1 = SymbolicTerm::Var(1);
    for c in 0..50 {
        ensure(cmp(&SymbolicTerm::Const(c), &v1, 1)? == Ordering::Less, || format!("{c} is not below v1"))?;
    }
    for _ in 0..200 {
        let s = random_term(&mut rng, 1, 2);
        let c = SymbolicTerm::Const(rng.gen_range(0..30));
        if cmp(&s, &c, 1)? == Ordering::Less {
            let matched = (0..30).any(|d| cmp(&s, &SymbolicTerm::Const(d), 1).ok() == Some(Ordering::Equal));
            ensure(matched, || format!("{s} is below {c} but equals no constant"))?;
        }
    }
    for _ in 0..200 {
        let (t, s) = (random_term(&mut rng, 2, 2), random_term(&mut rng, 2, 2));
        let verdict = cmp(&t, &s, 2)?;
        ensure(cmp(&lib(embed_diagonal(&t, 2))?, &lib(embed_diagonal(&s, 2))?, 3)? == verdict, || format!("diagonal: {t} vs {s}"))?;
        ensure(cmp(&lib(embed_skew(&t, 2))?, &lib(embed_skew(&s, 2))?, 3)? == verdict, || format!("skew: {t} vs {s}"))?;
    }
    Ok(json!({"less": tallies[0], "equal": tallies[1], "greater": tallies[2]}))
}

fn uf_axioms() -> Outcome {
    let base = RepUltrafilter::profinite_integer(0);
    let mut reports = Vec::new();
    for f in [None, Some(EPFunction::identity()), Some(EPFunction::double()), Some(EPFunction::successor())] {
        let u = match &f {
            None => base.clone(),
            Some(f) => lib(base.pushforward(f))?,
        };
        let r = lib(axiom_suite(&u, 12, 200, 50, SEED))?;
        ensure(r.passed(), || format!("{u}: {:?}", r.violations.first()))?;
        reports.push(json!({"ultrafilter": r.ultrafilter, "sets": r.dichotomy_sets, "checks": r.checks}));
    }
    Ok(json!(reports))
}

fn rk_slice() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let point = |rng: &mut ChaCha8Rng| RepUltrafilter::profinite_integer(rng.gen_range(0..1000));
    for _ in 0..50 {
        let (f, u) = (random_injective(&mut rng), point(&mut rng));
        let w = lib(rk_equiv_injective(&f, &u, DEFAULT_BOUND))?;
        ensure(w.verdict == RKVerdict::Equivalent, || format!("{f} on {u}: {w:?}"))?;
    }
    for _ in 0..100 {
        let w = point(&mut rng);
        ensure(lib(rk_le_check(&w, &w, &EPFunction::identity(), DEFAULT_BOUND))?, || format!("{w} not reflexive"))?;
        let (f, g) = (random_map(&mut rng), random_map(&mut rng));
        let v = lib(w.pushforward(&g))?;
        let u = lib(v.pushforward(&f))?;
        let premises = lib(rk_le_check(&v, &w, &g, DEFAULT_BOUND))? && lib(rk_le_check(&u, &v, &f, DEFAULT_BOUND))?;
        ensure(premises, || format!("premises fail for {f}, {g} on {w}"))?;
        ensure(lib(rk_le_check(&u, &w, &lib(f.compose(&g))?, DEFAULT_BOUND))?, || format!("{f} ∘ {g} on {w}"))?;
    }
    Ok(json!({"injective": 50, "triples": 100, "bound": DEFAULT_BOUND}))
}

fn cli_reports() -> Outcome {
    let seed = SEED.to_string();
    let commands: Vec<Vec<&str>> = vec![
        vec!["lift-laws", "--samples", "200", "--seed", &seed],
        vec!["verify-def1", "--samples", "100", "--choices", "3", "--seed", &seed],
        vec!["verify-chain", "--carrier", "omega", "--samples", "20", "--seed", &seed],
        vec!["uf-axioms", "--u", "profinite:0", "--samples", "50", "--seed", &seed],
        vec!["order-export", "--format", "json", "--k", "2"],
    ];
    let mut out = Vec::new();
    for args in commands {
        let r = cli::run(std::iter::once("ultralimit").chain(args.iter().copied()));
        ensure(r.exit == 0, || format!("{args:?}: {}{}", r.stdout, r.stderr))?;
        out.push(r.stdout);
    }
    Ok(json!(out))
}

type Criterion = (&'static str, fn() -> Outcome);

const CRITERIA: [Criterion; 9] = [
    ("Łoś sweep", los),
    ("lift laws", lift_laws),
    ("lifted diagonal witness", lifted_diagonal),
    ("direct system audits", definition1),
    ("finite-carrier collapse", finite_collapse),
    ("chain diagrams", chains),
    ("order of the ultrapower", order),
    ("ultrafilter axioms", uf_axioms),
    ("Rudin–Keisler slice", rk_slice),
];

fn main() -> ExitCode {
    let start = Instant::now();
    let mut failed = false;
    let mut first_run = Vec::new();
    for (i, (name, check)) in CRITERIA.iter().enumerate() {
        let t = Instant::now();
        let result = check();
        let status = if result.is_ok() { "PASS" } else { "FAIL" };
        let detail = match &result {
            Ok(v) => v.to_string().chars().take(160).collect::<String>(),
            Err(e) => e.clone(),
        };
        println!("criterion {:>2} {name:<26} {status} ({:.2}s) {detail}", i + 1, t.elapsed().as_secs_f64());
        failed |= result.is_err();
        first_run.push(result.map(|v| v.to_string()).unwrap_or_default());
    }

    let t = Instant::now();
    let determinism = (|| -> Result<String, String> {
        for (i, (name, check)) in CRITERIA.iter().enumerate() {
            let again = check()?.to_string();
            ensure(again == first_run[i], || format!("{name} report changed between runs"))?;
        }
        let (a, b) = (cli_reports()?.to_string(), cli_reports()?.to_string());
        ensure(a == b, || "CLI reports changed between runs".into())?;
        let total = start.elapsed();
        ensure(total < Duration::from_secs(60), || format!("suite took {total:?}"))?;
        Ok(format!("reports identical, suite {:.2}s", total.as_secs_f64()))
    })();
    let status = if determinism.is_ok() { "PASS" } else { "FAIL" };
    let detail = determinism.clone().unwrap_or_else(|e| e);
    println!("criterion 10 {:<26} {status} ({:.2}s) {detail}", "determinism", t.elapsed().as_secs_f64());
    failed |= determinism.is_err();

    if failed {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
