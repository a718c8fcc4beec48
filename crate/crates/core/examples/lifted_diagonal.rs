//! The lifted diagonal differs from the diagonal on (ω, ≤) but not on a
//! finite carrier.

use ultralimit::logic::{FinitePrincipal, FiniteStructure};
use ultralimit::skewlimit::{remark1_finite, remark1_witness};
use ultralimit::ultrafilter::RepUltrafilter;

fn main() -> ultralimit::Result<()> {
    for x in [0, 1] {
        let r = remark1_witness(&RepUltrafilter::profinite_integer(x))?;
        println!("{}", serde_json::to_string(&r).expect("serializable"));
    }
    let r = remark1_finite(&FiniteStructure::linear_order(3)?, FinitePrincipal::new(2, 1)?)?;
    println!("{}", serde_json::to_string(&r).expect("serializable"));
    Ok(())
}
