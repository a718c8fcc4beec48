//! Derived values checked against independent brute-force oracles: the
//! oracle is computed first, then compared with the library's answer.

use std::cmp::Ordering;

use ultralimit::epfunc::{EPFunction, Relation};
use ultralimit::logic::{eval_formula, finite_ultrapower, index_tuple, parse_formula, FinitePrincipal, FiniteStructure};
use ultralimit::ordinal::SmallOrdinal;
use ultralimit::periodic::PeriodicSet;
use ultralimit::rkorder::{rk_equiv_injective, rk_le_check, term_to_map, RKVerdict};
use ultralimit::skewlimit::{check_coherence, OmegaSystem, StagedTerm};
use ultralimit::terms::{embed_skew, term_compare, term_eval, SymbolicTerm};
use ultralimit::ultrafilter::{Agreement, RepUltrafilter};

fn set(s: &str) -> PeriodicSet {
    s.parse().unwrap()
}

fn members(a: &PeriodicSet, below: u64) -> Vec<u64> {
    (0..below).filter(|&n| a.member(n)).collect()
}

/// Smallest period and threshold of a membership predicate, found by scanning
/// divisors on a long window.
fn minimal_shape(member: impl Fn(u64) -> bool, window: u64) -> (u64, u64) {
    let period = (1..=64)
        .find(|&p| (500..window).all(|n| member(n) == member(n + p)))
        .expect("periodic");
    let threshold = (0..500).find(|&t| (t..window).all(|n| member(n) == member(n + period))).unwrap();
    (threshold, period)
}

#[test]
fn ordinal_examples() {
    let o = SmallOrdinal::new;
    assert_eq!(o(0, 7).compare(&o(1, 0)), Ordering::Less);
    assert_eq!(o(1, 2).compare(&o(1, 1)), Ordering::Greater);
    assert_eq!(o(1, 5).succ(), o(1, 6));
    assert!(o(1, 0).is_limit() && !o(0, 0).is_limit() && !o(1, 3).is_limit());
    assert_eq!(o(1, 0).fund_seq(5).unwrap(), o(0, 5));
    assert_eq!(o(2, 0).fund_seq(9).unwrap(), o(1, 9));
}

#[test]
fn canonical_forms_match_minimal_shapes() {
    for (input, expected) in [("0:4:{0,2}:", "0:2:{0}:"), ("2:2:{0}:10", "0:2:{0}:"), ("0:1:{0}:", "0:1:{0}:")] {
        let a = set(input);
        let (threshold, period) = minimal_shape(|n| a.member(n), 2000);
        assert_eq!((a.threshold(), a.period()), (threshold, period));
        assert_eq!(a.to_string(), expected);
    }
    let evens = set("0:2:{0}:");
    let sixes = evens.intersection(&PeriodicSet::multiples(3).unwrap()).unwrap();
    assert_eq!(members(&sixes, 10_000), (0..10_000).filter(|n| n % 6 == 0).collect::<Vec<_>>());
    assert_eq!(sixes, PeriodicSet::multiples(6).unwrap());
    assert!(set("3:1:{}:101").member(2));
}

#[test]
fn map_examples_pointwise() {
    let (succ, double) = (EPFunction::successor(), EPFunction::double());
    let composed = succ.compose(&double).unwrap();
    assert!((0..10_000).all(|n| composed.eval(n) == 2 * n + 1));
    assert_eq!(composed, EPFunction::affine(2, 1).unwrap());

    let above_five = EPFunction::constant(5).compare_set(Relation::Less, &EPFunction::identity()).unwrap();
    assert_eq!(members(&above_five, 10_000), (6..10_000).collect::<Vec<_>>());
    let le = succ.compare_set(Relation::LessEq, &double).unwrap();
    assert_eq!(members(&le, 10_000), (1..10_000).collect::<Vec<_>>());

    let pre = double.preimage(&PeriodicSet::multiples(4).unwrap()).unwrap();
    assert_eq!(members(&pre, 10_000), (0..10_000).filter(|n| (2 * n) % 4 == 0).collect::<Vec<_>>());

    for f in [double.clone(), EPFunction::affine(1, 3).unwrap()] {
        let g = f.left_inverse().unwrap();
        assert!((0..10_000).all(|n| g.eval(f.eval(n)) == n));
    }
    let halve = double.left_inverse().unwrap();
    assert!((0..1000).all(|m| halve.eval(m) == if m % 2 == 0 { m / 2 } else { 0 }));
}

#[test]
fn ultrafilter_examples_by_residue_rule() {
    let u0 = RepUltrafilter::profinite_integer(0);
    // oracle: a set with threshold N and period p is in u₀ iff 0 mod p is an eventual residue
    for k in 1..=30 {
        assert!(u0.member(&PeriodicSet::multiples(k).unwrap()).unwrap());
    }
    assert!(!u0.member(&PeriodicSet::finite([0, 1, 2]).unwrap()).unwrap());
    let mapped = u0.pushforward(&EPFunction::double()).unwrap();
    assert!(mapped.member(&PeriodicSet::multiples(4).unwrap()).unwrap());
    assert_eq!(u0.pushforward(&EPFunction::constant(3)).unwrap(), RepUltrafilter::Principal(3));

    assert_eq!(u0.equal_bounded(&u0, 100).unwrap(), Agreement::EqualUpTo(100));
    assert_eq!(
        u0.equal_bounded(&RepUltrafilter::profinite_integer(1), 2).unwrap(),
        Agreement::DistinguishedBy(set("0:2:{0}:"))
    );
    assert_eq!(
        u0.equal_bounded(&RepUltrafilter::Principal(0), 2).unwrap(),
        Agreement::DistinguishedBy(PeriodicSet::finite([0]).unwrap().complement())
    );
}

#[test]
fn ultrapower_matches_enumeration() {
    for (n, i, point) in [(2, 2, 1), (3, 3, 0)] {
        let m = FiniteStructure::linear_order(n).unwrap();
        let a = FinitePrincipal::new(i, point).unwrap();
        let power = finite_ultrapower(&m, a).unwrap();
        // oracle: g ~ h iff g(point) = h(point), so classes are indexed by g(point)
        let functions: Vec<Vec<usize>> = (0..n.pow(i as u32)).map(|c| index_tuple(n, i, c)).collect();
        for g in &functions {
            for h in &functions {
                assert_eq!(power.class_of(g) == power.class_of(h), g[point] == h[point]);
            }
        }
        assert_eq!(power.structure.size(), n);
    }
    let m = FiniteStructure::linear_order(2).unwrap();
    let phi = parse_formula("forall x0. exists x1. x0 <= x1").unwrap();
    let brute = (0..2).all(|x| (0..2).any(|y| x <= y));
    assert_eq!(eval_formula(&m, &phi, &[]).unwrap(), brute);
}

#[test]
fn term_verdicts_from_comparison_sets() {
    let u0 = RepUltrafilter::profinite_integer(0);
    let t = |s: &str| s.parse::<SymbolicTerm>().unwrap();
    // oracle: {n : 5 < n} is cofinite and {n : n + 1 < 2n} = {n ≥ 2}
    assert!((6..1000).all(|n| 5 < n));
    assert_eq!(term_compare(&t("5"), &t("v1"), &u0, 1).unwrap(), Ordering::Less);
    let less: Vec<u64> = (0..1000).filter(|&n| n + 1 < 2 * n).collect();
    assert_eq!(less, (2..1000).collect::<Vec<_>>());
    assert_eq!(term_compare(&t("v1 + 1"), &t("2*v1"), &u0, 1).unwrap(), Ordering::Less);

    let lifted = embed_skew(&t("v1"), 1).unwrap();
    assert_eq!(lifted, t("v2"));
    // ground oracle: hierarchical environments n1 ≫ n2 put v2 below v1
    for (n1, n2) in [(1_000_000u64, 1000u64), (10_000, 12)] {
        assert!(term_eval(&lifted, &[n1, n2]).unwrap() < term_eval(&t("v1"), &[n1, n2]).unwrap());
    }
    assert_eq!(term_compare(&lifted, &t("v1"), &u0, 2).unwrap(), Ordering::Less);
}

#[test]
fn system_examples_cross_checked_by_evaluation() {
    let o = SmallOrdinal::new;
    let system = OmegaSystem::skew(RepUltrafilter::profinite_integer(0), o(1, 2)).unwrap();
    let v1 = StagedTerm::finite(1, SymbolicTerm::Var(1)).unwrap();
    let image = system.embed(o(0, 1), o(0, 3), &v1).unwrap().finite_term().unwrap();
    for env in [[5u64, 7, 9], [100, 3, 41]] {
        assert_eq!(term_eval(&image, &env).unwrap(), env[2]);
    }
    for m in [0, 5, 17] {
        let c = StagedTerm::constant(o(0, 0), m);
        let image = system.embed(o(0, 0), o(0, 3), &c).unwrap().finite_term().unwrap();
        assert_eq!(term_eval(&image, &[1, 2, 3]).unwrap(), m);
    }
    let r = check_coherence(&system, &[StagedTerm::constant(o(0, 0), 2)], &[(o(0, 0), o(1, 0), o(1, 1))]).unwrap();
    assert!(r.passed());
}

#[test]
fn rk_examples_against_membership() {
    let u0 = RepUltrafilter::profinite_integer(0);
    let u1 = RepUltrafilter::profinite_integer(1);
    let succ = EPFunction::successor();
    // oracle: the preimage of 1 mod m under n ↦ n + 1 is 0 mod m
    for m in 1..=100 {
        let class = PeriodicSet::residue_class(m, 1 % m).unwrap();
        assert_eq!(succ.preimage(&class).unwrap(), PeriodicSet::residue_class(m, 0).unwrap());
        assert!(u1.member(&class).unwrap());
    }
    assert!(rk_le_check(&u1, &u0, &succ, 100).unwrap());
    assert!(rk_le_check(&RepUltrafilter::Principal(3), &u0, &EPFunction::constant(3), 100).unwrap());

    let w = rk_equiv_injective(&EPFunction::double(), &u0, 720).unwrap();
    assert_eq!(w.verdict, RKVerdict::Equivalent);

    let case: SymbolicTerm = "case(2; 0 | v1 @ v1)".parse().unwrap();
    let f = term_to_map(&case).unwrap();
    assert_eq!(f.period(), 2);
    assert!((0..1000).all(|n| f.eval(n) == term_eval(&case, &[n]).unwrap()));
}
