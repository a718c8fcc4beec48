//! Elementary chains: the constructed isomorphisms, and what a broken
//! isomorphism looks like.

use ultralimit::logic::{FinitePrincipal, FiniteStructure};
use ultralimit::skewlimit::{verify_finite_chain, verify_omega_chain, FiniteChain, OmegaChain};
use ultralimit::ultrafilter::RepUltrafilter;

fn main() -> ultralimit::Result<()> {
    let m = FiniteStructure::linear_order(3)?;
    let mut chain = FiniteChain::standard(&m, FinitePrincipal::new(2, 0)?, 3)?;
    let report = verify_finite_chain(&chain)?;
    println!("finite chain of length {}: {} checks passed", report.length, report.checks);
    chain.perturb_iso(2, 0, 1);
    println!("after perturbing ι_2: {}", verify_finite_chain(&chain).unwrap_err());

    let mut omega = OmegaChain::self_chain(RepUltrafilter::profinite_integer(0), 3)?;
    let report = verify_omega_chain(&omega, 20, 5)?;
    println!("symbolic self-chain of length {}: {} checks passed", report.length, report.checks);
    omega.perturb(1, 2, 9);
    println!("after swapping 2 and 9 in ι_1: {}", verify_omega_chain(&omega, 20, 5).unwrap_err());
    Ok(())
}
