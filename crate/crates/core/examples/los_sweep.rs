//! Łoś's theorem checked on finite ultrapowers, plus the lift laws.

use ultralimit::logic::{finite_ultrapower, lift_law_audit, los_check, los_sweep, parse_formula, FinitePrincipal, FiniteStructure, SweepConfig};

fn main() -> ultralimit::Result<()> {
    let m = FiniteStructure::linear_order(3)?;
    let a = FinitePrincipal::new(3, 1)?;
    let power = finite_ultrapower(&m, a)?;
    println!("|M| = {}, |M^I / a| = {}", m.size(), power.structure.size());

    let phi = parse_formula("exists x1. (x0 < x1 & !(x1 = x0))")?;
    let gs = vec![vec![0, 2, 1]];
    println!("{phi} at class of {:?}: Łoś holds = {}", gs[0], los_check(&m, &power, &phi, &gs)?);

    let report = los_sweep(&SweepConfig::default())?;
    println!(
        "sweep: {} structures, {} formulas, {} checks, {} failures",
        report.structures,
        report.formulas,
        report.checks,
        report.failures.len()
    );

    let laws = lift_law_audit(4, 3, 200, 11)?;
    println!("lift laws: {} checks, {} failures", laws.checks, laws.failures.len());
    Ok(())
}
