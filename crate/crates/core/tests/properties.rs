//! Cross-module invariants under randomized inputs.

use std::cmp::Ordering;

use proptest::prelude::{any, prop_assert, prop_assert_eq, proptest, ProptestConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use ultralimit::logic::{finite_ultrapower, los_check, random_formula, FinitePrincipal, FiniteStructure};
use ultralimit::ordinal::SmallOrdinal;
use ultralimit::periodic::PeriodicSet;
use ultralimit::rkorder::{order_export, random_map, check_export, ExportFormat};
use ultralimit::skewlimit::{direct_limit, OmegaSystem, Variant, DEFAULT_STAGE_CAP};
use ultralimit::terms::{embed_skew, random_term, term_compare};
use ultralimit::ultrafilter::{random_set, Agreement, RepUltrafilter};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn set_operations_follow_de_morgan(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (a, b) = (random_set(&mut r, 8, 6).unwrap(), random_set(&mut r, 8, 6).unwrap());
        let left = a.union(&b).unwrap().complement();
        let right = a.complement().intersection(&b.complement()).unwrap();
        prop_assert_eq!(&left, &right);
        prop_assert_eq!(a.difference(&b).unwrap(), a.intersection(&b.complement()).unwrap());
        prop_assert!(a.intersection(&b).unwrap().is_subset(&a).unwrap());
        let canonical: PeriodicSet = a.to_string().parse().unwrap();
        prop_assert_eq!(canonical, a);
    }

    #[test]
    fn term_order_is_transitive(seed in any::<u64>(), x in 0u64..50) {
        let mut r = rng(seed);
        let u = RepUltrafilter::profinite_integer(x);
        let ts: Vec<_> = (0..3).map(|_| random_term(&mut r, 2, 2)).collect();
        let c = |a, b| term_compare(&ts[a], &ts[b], &u, 2).unwrap();
        if c(0, 1) != Ordering::Greater && c(1, 2) != Ordering::Greater {
            prop_assert!(c(0, 2) != Ordering::Greater);
        }
        if c(0, 1) == Ordering::Equal && c(1, 2) == Ordering::Equal {
            prop_assert_eq!(c(0, 2), Ordering::Equal);
        }
    }

    #[test]
    fn skew_embedding_preserves_order(seed in any::<u64>()) {
        let mut r = rng(seed);
        let u = RepUltrafilter::profinite_integer(seed % 97);
        let (t, s) = (random_term(&mut r, 1, 3), random_term(&mut r, 1, 3));
        let before = term_compare(&t, &s, &u, 1).unwrap();
        let after = term_compare(&embed_skew(&t, 1).unwrap(), &embed_skew(&s, 1).unwrap(), &u, 2).unwrap();
        prop_assert_eq!(before, after);
    }

    #[test]
    fn embeddings_compose_through_limits(seed in any::<u64>(), variant in proptest::bool::ANY) {
        let o = SmallOrdinal::new;
        let variant = if variant { Variant::Skew } else { Variant::Diagonal };
        let system = OmegaSystem::new(RepUltrafilter::profinite_integer(0), o(2, 3), DEFAULT_STAGE_CAP, variant).unwrap();
        let stages = [o(0, 0), o(0, 2), o(0, 4), o(1, 0), o(1, 2), o(2, 0), o(2, 1), o(2, 3)];
        let mut r = rng(seed);
        for (i, &b) in stages.iter().enumerate() {
            let x = system.random_payload(&mut r, b, 3).unwrap();
            for (j, &g) in stages.iter().enumerate().skip(i) {
                for &d in &stages[j..] {
                    let via = system.embed(g, d, &system.embed(b, g, &x).unwrap()).unwrap();
                    prop_assert!(system.equal(&via, &system.embed(b, d, &x).unwrap()).unwrap());
                }
            }
        }
    }

    #[test]
    fn embeddings_preserve_order(seed in any::<u64>()) {
        let o = SmallOrdinal::new;
        let system = OmegaSystem::skew(RepUltrafilter::profinite_integer(3), o(2, 2)).unwrap();
        let mut r = rng(seed);
        for (b, g) in [(o(0, 2), o(0, 5)), (o(0, 3), o(1, 0)), (o(1, 0), o(1, 2)), (o(1, 1), o(2, 1))] {
            let (x, y) = (system.random_payload(&mut r, b, 3).unwrap(), system.random_payload(&mut r, b, 3).unwrap());
            let before = system.compare(&x, &y).unwrap();
            let after = system.compare(&system.embed(b, g, &x).unwrap(), &system.embed(b, g, &y).unwrap()).unwrap();
            prop_assert_eq!(before, after);
        }
    }

    #[test]
    fn threads_are_stable_along_the_system(seed in any::<u64>()) {
        let o = SmallOrdinal::new;
        let system = OmegaSystem::skew(RepUltrafilter::profinite_integer(0), o(1, 0)).unwrap();
        let limit = direct_limit(&system, o(1, 0)).unwrap();
        let mut r = rng(seed);
        let x = system.random_payload(&mut r, o(0, 2), 2).unwrap();
        for k in 2..6 {
            let later = system.embed(o(0, 2), o(0, k), &x).unwrap();
            prop_assert!(limit.threads_equal(&x, &later).unwrap());
        }
    }

    #[test]
    fn pushforward_respects_composition(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (f, g) = (random_map(&mut r), random_map(&mut r));
        let u = RepUltrafilter::profinite_integer(seed % 1000);
        let stepwise = u.pushforward(&g).unwrap().pushforward(&f).unwrap();
        let direct = u.pushforward(&f.compose(&g).unwrap()).unwrap();
        prop_assert!(matches!(stepwise.equal_bounded(&direct, 60).unwrap(), Agreement::EqualUpTo(_)));
        let a = random_set(&mut r, 10, 5).unwrap();
        prop_assert_eq!(stepwise.member(&a).unwrap(), direct.member(&a).unwrap());
    }

    #[test]
    fn los_on_random_structures(seed in any::<u64>(), size in 1usize..4, index in 1usize..4) {
        use rand::Rng;
        let mut r = rng(seed);
        let holds = (0..size * size).map(|_| r.gen_bool(0.5)).collect();
        let m = FiniteStructure::new(size).unwrap().with_relation("R", 2, holds).unwrap();
        let a = FinitePrincipal::new(index, r.gen_range(0..index)).unwrap();
        let power = finite_ultrapower(&m, a).unwrap();
        let phi = random_formula(&mut r, 2, 3);
        let gs: Vec<Vec<usize>> = (0..2).map(|_| (0..index).map(|_| r.gen_range(0..size)).collect()).collect();
        prop_assert!(los_check(&m, &power, &phi, &gs).unwrap());
    }

    #[test]
    fn exports_are_chains(seed in any::<u64>()) {
        let mut r = rng(seed);
        let terms: Vec<_> = (0..12).map(|_| random_term(&mut r, 2, 2)).collect();
        let u = RepUltrafilter::profinite_integer(seed % 60);
        for format in [ExportFormat::Dot, ExportFormat::Json] {
            let doc = order_export(&terms, &u, 2, format).unwrap();
            let nodes = check_export(&doc, format).unwrap();
            prop_assert!(nodes >= 1 && nodes <= terms.len());
        }
    }
}
