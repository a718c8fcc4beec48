//! The order of ∏_u (ω, ≤) and its second iterate on a sample of terms.

use ultralimit::rkorder::{order_export, ExportFormat};
use ultralimit::terms::{term_compare, verdict_sets, SymbolicTerm};
use ultralimit::ultrafilter::RepUltrafilter;

fn main() -> ultralimit::Result<()> {
    let u = RepUltrafilter::profinite_integer(0);
    let t = |s: &str| s.parse::<SymbolicTerm>();
    let (a, b) = (t("v1 + 1")?, t("2*v1")?);
    let sets = verdict_sets(&a, &b, &u, 1)?;
    println!("{a} vs {b}: {:?}; less on {}, equal on {}, greater on {}", term_compare(&a, &b, &u, 1)?, sets.less, sets.equal, sets.greater);

    let terms: Vec<SymbolicTerm> = ["0", "7", "v1", "v1 + 1", "2*v1", "patch(v1; 0->3; v1)", "v2", "v2 + v1", "case(2; v2 | 5 @ v1)"]
        .iter()
        .map(|s| t(s))
        .collect::<ultralimit::Result<_>>()?;
    print!("{}", order_export(&terms, &u, 2, ExportFormat::Dot)?);
    println!("{}", order_export(&terms, &u, 2, ExportFormat::Json)?);
    Ok(())
}
