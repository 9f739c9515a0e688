//! Seminorm and operator invariants on random elements.

use std::sync::{Arc, OnceLock};

use loopmetric::graph::{bouquet, dynkin_a, DirectedDouble};
use loopmetric::loops::{AlgebraElement, GnsContext};
use loopmetric::seminorms::{adjusted_lip_value, gns_norm, item_rng, lip, random_homogeneous, random_homogeneous_complex};
use loopmetric::{Complex64, DEFAULT_BUDGET};
use proptest::prelude::*;

fn contexts() -> &'static [GnsContext; 2] {
    static CTX: OnceLock<[GnsContext; 2]> = OnceLock::new();
    CTX.get_or_init(|| {
        let make = |g| GnsContext::new(Arc::new(DirectedDouble::new(&g)), 7, 3, DEFAULT_BUDGET).unwrap();
        [make(bouquet(2).unwrap()), make(dynkin_a(4).unwrap())]
    })
}

fn mixed(ctx: &GnsContext, seed: u64, complex: bool) -> AlgebraElement {
    let mut a = AlgebraElement::unit().scale(Complex64::new(0.3, 0.0));
    for k in 1..=3 {
        let mut rng = item_rng(seed, k as u64, 0);
        let x = if complex { random_homogeneous_complex(ctx, k, &mut rng) } else { random_homogeneous(ctx, k, &mut rng) };
        if let Some(x) = x {
            a = a.add(&x);
        }
    }
    a
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn lip_is_absolutely_homogeneous(g in 0usize..2, seed in any::<u64>(), re in -3.0f64..3.0, im in -3.0f64..3.0) {
        let ctx = &contexts()[g];
        let a = mixed(ctx, seed, true);
        let c = Complex64::new(re, im);
        let scaled = lip(ctx, &a.scale(c)).unwrap();
        prop_assert!((scaled - c.norm() * lip(ctx, &a).unwrap()).abs() <= 1e-8 * (1.0 + scaled));
    }

    #[test]
    fn lip_is_subadditive_and_ignores_scalars(g in 0usize..2, s1 in any::<u64>(), s2 in any::<u64>()) {
        let ctx = &contexts()[g];
        let (a, b) = (mixed(ctx, s1, true), mixed(ctx, s2, true));
        let sum = lip(ctx, &a.add(&b)).unwrap();
        prop_assert!(sum <= lip(ctx, &a).unwrap() + lip(ctx, &b).unwrap() + 1e-8);
        let shifted = a.add(&AlgebraElement::unit().scale(Complex64::new(5.0, -1.0)));
        prop_assert!((lip(ctx, &shifted).unwrap() - lip(ctx, &a).unwrap()).abs() <= 1e-8);
    }

    #[test]
    fn adjusted_dominates_lip(g in 0usize..2, seed in any::<u64>()) {
        let ctx = &contexts()[g];
        let a = mixed(ctx, seed, false);
        prop_assert!(lip(ctx, &a).unwrap() <= adjusted_lip_value(ctx, &a).unwrap() + 1e-8);
    }

    #[test]
    fn operator_norm_dominates_vacuum_norm(g in 0usize..2, seed in any::<u64>()) {
        // ||a|| >= ||a Omega|| = ||a||_2.
        let ctx = &contexts()[g];
        let a = mixed(ctx, seed, true);
        prop_assert!(gns_norm(ctx, &a).unwrap() >= a.l2_norm() - 1e-8);
    }

    #[test]
    fn star_is_an_involution_preserving_norms(g in 0usize..2, seed in any::<u64>()) {
        let ctx = &contexts()[g];
        let dd = ctx.double();
        let a = mixed(ctx, seed, true);
        prop_assert!(a.star(dd).star(dd).sub(&a).l2_norm() <= 1e-12);
        prop_assert!((gns_norm(ctx, &a.star(dd)).unwrap() - gns_norm(ctx, &a).unwrap()).abs() <= 1e-8);
    }
}
