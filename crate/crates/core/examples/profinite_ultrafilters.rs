//! Representable ultrafilters: principal, profinite and pushforwards.

use ultralimit::epfunc::EPFunction;
use ultralimit::periodic::PeriodicSet;
use ultralimit::ultrafilter::{axiom_suite, Agreement, RepUltrafilter};

fn main() -> ultralimit::Result<()> {
    let u: RepUltrafilter = "profinite:{2->1,3->2}".parse()?;
    println!("u = {u}");
    for set in ["0:6:{5}:", "0:2:{0}:", "4:1:{0}:1111"] {
        let a: PeriodicSet = set.parse()?;
        println!("  {a} ∈ u ? {}", u.member(&a)?);
    }

    let base = RepUltrafilter::profinite_integer(0);
    for (name, f) in [("identity", EPFunction::identity()), ("double", EPFunction::double()), ("successor", EPFunction::successor()), ("constant 7", EPFunction::constant(7))] {
        let v = base.pushforward(&f)?;
        let report = axiom_suite(&v, 8, 50, 20, 1)?;
        println!("{name:>10}: {v}  axioms pass: {} ({} checks)", report.passed(), report.checks);
    }

    let shifted = base.pushforward(&EPFunction::successor())?;
    match shifted.equal_bounded(&RepUltrafilter::profinite_integer(1), 100)? {
        Agreement::EqualUpTo(b) => println!("succ_*(profinite:0) agrees with profinite:1 on every test up to {b}"),
        Agreement::DistinguishedBy(s) => println!("distinguished by {s}"),
    }
    if let Agreement::DistinguishedBy(s) = base.equal_bounded(&RepUltrafilter::profinite_integer(1), 100)? {
        println!("profinite:0 and profinite:1 are separated by {s}");
    }
    Ok(())
}
