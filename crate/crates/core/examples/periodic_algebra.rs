//! Boolean algebra of eventually periodic sets and eventually periodic maps.

use ultralimit::epfunc::{EPFunction, Relation};
use ultralimit::periodic::PeriodicSet;

fn main() -> ultralimit::Result<()> {
    let evens: PeriodicSet = "0:4:{0,2}:".parse()?;
    println!("canonical form of 0:4:{{0,2}}: is {evens}");

    let thirds = PeriodicSet::residue_class(3, 1)?;
    let small = PeriodicSet::finite([1, 4, 9])?;
    println!("evens ∩ 1 mod 3     = {}", evens.intersection(&thirds)?);
    println!("evens ∪ {{1,4,9}}     = {}", evens.union(&small)?);
    println!("complement of evens = {}", evens.complement());
    println!("{{1,4,9}} is {:?}", small.classify());

    let f: EPFunction = "0:2:[(1,0),(3,1)]:".parse()?;
    let g = EPFunction::double();
    println!("f = {f}, f(0..8) = {:?}", (0..8).map(|n| f.eval(n)).collect::<Vec<_>>());
    println!("f ∘ 2n = {}", f.compose(&g)?);
    println!("{{n : f(n) < 2n}} = {}", f.compare_set(Relation::Less, &g)?);
    println!("f⁻¹[evens] = {}", f.preimage(&evens)?);
    println!("left inverse of 2n+5 = {}", EPFunction::affine(2, 5)?.left_inverse()?);
    Ok(())
}
