use std::collections::BTreeMap;

use jetfactor::coframes::{d_function, exterior_d};
use jetfactor::fixtures::elkin_32;
use jetfactor::sysio::parse_expr;
use jetfactor::{RatFn, Rational, VarId};
use proptest::prelude::*;

const VARS: [VarId; 4] = [VarId::State(1), VarId::State(2), VarId::Control { order: 0, index: 1 }, VarId::Control { order: 1, index: 2 }];

fn poly() -> impl Strategy<Value = RatFn> {
    prop::collection::vec((-4i64..=4, prop::array::uniform4(0u32..2)), 1..4).prop_map(|terms| {
        terms.into_iter().fold(RatFn::zero(), |acc, (c, exps)| {
            let mono = VARS
                .iter()
                .zip(exps)
                .fold(RatFn::from_int(c), |m, (v, e)| m * RatFn::var(*v).pow(e as i32).unwrap());
            acc + mono
        })
    })
}

fn ratfn() -> impl Strategy<Value = RatFn> {
    (poly(), poly()).prop_map(|(n, d)| if d.is_zero() { n } else { n.div(&d).unwrap() })
}

fn cfg() -> ProptestConfig {
    let cases = std::env::var("KERNEL_CASES").ok().and_then(|c| c.parse().ok()).unwrap_or(1000);
    ProptestConfig { cases, ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(cfg())]

    #[test]
    fn field_laws(a in ratfn(), b in ratfn(), c in ratfn()) {
        prop_assert_eq!(&(&a + &b) + &c, &a + &(&b + &c));
        prop_assert_eq!(&a * &b, &b * &a);
        prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
        prop_assert!((&a - &a).is_zero());
        if !a.is_zero() {
            prop_assert!(a.mul(&a.inv().unwrap()).is_one());
        }
    }

    #[test]
    fn leibniz(a in ratfn(), b in ratfn()) {
        for v in VARS {
            prop_assert_eq!((&a * &b).partial(v), &(&a.partial(v) * &b) + &(&a * &b.partial(v)));
        }
        let sys = elkin_32("x2*u1");
        let lhs = sys.total_derivative(&(&a * &b), 1);
        let rhs = &(&sys.total_derivative(&a, 1) * &b) + &(&a * &sys.total_derivative(&b, 1));
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn substitution_is_a_homomorphism(a in poly(), b in poly(), s1 in ratfn(), s2 in poly()) {
        let table: BTreeMap<VarId, RatFn> = [(VARS[0], s1), (VARS[2], s2)].into_iter().collect();
        let sub = |h: &RatFn| h.substitute(&|v| table.get(&v).cloned());
        let (sa, sb) = (sub(&a).unwrap(), sub(&b).unwrap());
        prop_assert_eq!(sub(&(&a + &b)).unwrap(), &sa + &sb);
        prop_assert_eq!(sub(&(&a * &b)).unwrap(), &sa * &sb);
        if !b.is_zero() && !sb.is_zero() {
            prop_assert_eq!(sub(&a.div(&b).unwrap()).unwrap(), sa.div(&sb).unwrap());
        }
    }

    #[test]
    fn d_squared_vanishes(h in ratfn(), g in poly()) {
        prop_assert!(exterior_d(&d_function(&h)).is_zero());
        let lhs = exterior_d(&d_function(&g).scale(&h));
        prop_assert_eq!(lhs, d_function(&h).wedge(&d_function(&g)));
    }

    #[test]
    fn canonical_form_is_idempotent(a in ratfn()) {
        prop_assert_eq!(a.renormalize(), a.clone());
        let back = parse_expr(&a.to_string()).unwrap();
        prop_assert_eq!(back.to_string(), a.to_string());
        prop_assert_eq!(back, a.clone());
        if !a.is_zero() {
            let lead = a.den().leading_coeff();
            prop_assert_eq!(lead, Rational::from_integer(1.into()));
        }
    }
}
