//! Rudin–Keisler certificates for representable maps.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use ultralimit::epfunc::EPFunction;
use ultralimit::rkorder::{random_injective, rk_equiv_injective, rk_le_check, term_to_map, DEFAULT_BOUND};
use ultralimit::ultrafilter::RepUltrafilter;

fn main() -> ultralimit::Result<()> {
    let u = RepUltrafilter::profinite_integer(0);
    let f = term_to_map(&"case(2; 2*v1 | 3*v1 + 1 @ v1)".parse()?)?;
    println!("term map: {f}");

    let w = rk_equiv_injective(&EPFunction::double(), &u, DEFAULT_BOUND)?;
    println!("double: {:?} via {} (image {})", w.verdict, w.backward, w.image);

    println!(
        "profinite:1 = succ_*(profinite:0): {}",
        rk_le_check(&RepUltrafilter::profinite_integer(1), &u, &EPFunction::successor(), 100)?
    );

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..5 {
        let f = random_injective(&mut rng);
        let w = rk_equiv_injective(&f, &u, DEFAULT_BOUND)?;
        println!("{f:>28}  {:?}  inverse {}", w.verdict, w.backward);
    }
    Ok(())
}
