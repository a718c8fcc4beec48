//! The skew direct system over (ω, ≤) through the first limit stages.

use ultralimit::ordinal::SmallOrdinal;
use ultralimit::skewlimit::{
    audit_stages, audit_triples, check_coherence, check_welldef_limit, direct_limit, sample_payloads, welldef_choices,
    OmegaSystem, StagedTerm,
};
use ultralimit::terms::SymbolicTerm;
use ultralimit::ultrafilter::RepUltrafilter;

fn main() -> ultralimit::Result<()> {
    let o = SmallOrdinal::new;
    let system = OmegaSystem::skew(RepUltrafilter::profinite_integer(0), o(2, 2))?;

    let g = StagedTerm::finite(1, SymbolicTerm::Var(1))?;
    for target in [o(0, 2), o(0, 3), o(1, 0), o(1, 1), o(2, 0), o(2, 1)] {
        println!("e(1, {target})(v1) = {}", system.embed(o(0, 1), target, &g)?);
    }

    let limit = direct_limit(&system, o(1, 0))?;
    let (a, b) = (StagedTerm::finite(1, SymbolicTerm::Var(1))?, StagedTerm::finite(2, SymbolicTerm::Var(2))?);
    println!("thread(1, v1) = thread(2, v2): {}", limit.threads_equal(&a, &b)?);
    let c = StagedTerm::finite(2, SymbolicTerm::Var(1))?;
    println!("thread(1, v1) = thread(2, v1): {}", limit.threads_equal(&a, &c)?);

    let sample = sample_payloads(&system, &audit_stages(o(2, 2)), 10, 1)?;
    let coherence = check_coherence(&system, &sample, &audit_triples(o(2, 2)))?;
    println!("coherence: {} checks over {} triples, {} failures", coherence.checks, coherence.triples, coherence.failures.len());

    let h = system.embed(o(0, 1), o(1, 2), &StagedTerm::finite(1, "2*v1 + 1".parse()?)?)?;
    let thread = system.embed(o(1, 2), o(2, 0), &h)?;
    let choices = welldef_choices(&system, &thread, 4)?;
    let report = check_welldef_limit(&system, &thread, o(2, 1), &choices)?;
    println!("thread {thread}: {} representatives, all images equal: {}", choices.len(), report.passed());
    Ok(())
}
