use std::collections::BTreeMap;

use chern_core::family::{
    build_section, cycle_from_constant_family, section_from_descriptors, validate_parabolic_data,
    BundlePoint, CurveFamily, FamilyMode, FiberDescriptor, ParabolicData,
};
use chern_core::lattice::{
    hyperbolic_distance, in_k_plus, restriction_bound_satisfied, BoundQuery, IntersectionForm,
    LatticeClass, Rational,
};
use proptest::prelude::*;

fn lorentz3() -> IntersectionForm {
    IntersectionForm::diagonal(&[1, -1, -1]).unwrap()
}

/// Integral class strictly inside the forward light cone of `diag(1, -1, -1)`.
fn cone_class() -> impl Strategy<Value = LatticeClass> {
    (-20i64..20, -20i64..20, 1i64..15).prop_map(|(b, c, k)| {
        let a = ((b * b + c * c) as f64).sqrt().ceil() as i64 + k;
        LatticeClass::from_ints(&[a, b, c])
    })
}

#[test]
fn reference_distance() {
    let q = IntersectionForm::diagonal(&[1, -1]).unwrap();
    let d = hyperbolic_distance(
        &LatticeClass::from_ints(&[2, 1]),
        &LatticeClass::from_ints(&[1, 0]),
        &q,
    )
    .unwrap();
    assert!((d - 0.549306).abs() <= 1e-6);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn distance_satisfies_triangle_inequality(a in cone_class(), b in cone_class(), c in cone_class()) {
        let q = lorentz3();
        let ab = hyperbolic_distance(&a, &b, &q).unwrap();
        let bc = hyperbolic_distance(&b, &c, &q).unwrap();
        let ac = hyperbolic_distance(&a, &c, &q).unwrap();
        prop_assert!(ac <= ab + bc + 1e-9, "{ac} > {ab} + {bc}");
        prop_assert!(ab >= 0.0);
        prop_assert_eq!(ab, hyperbolic_distance(&b, &a, &q).unwrap());
    }

    #[test]
    fn distance_ignores_positive_scaling(a in cone_class(), b in cone_class(), s in 1i64..9, t in 1i64..9) {
        let q = lorentz3();
        let d = hyperbolic_distance(&a, &b, &q).unwrap();
        let scaled = hyperbolic_distance(&a.scale(Rational::new(s, t)), &b.scale(Rational::from_integer(t)), &q).unwrap();
        prop_assert!((d - scaled).abs() <= 1e-9);
        prop_assert!(hyperbolic_distance(&a, &a.scale(Rational::from_integer(s)), &q).unwrap() <= 1e-7);
    }

    #[test]
    fn cone_classes_lie_in_k_plus(a in cone_class()) {
        let q = lorentz3();
        let ample = [LatticeClass::from_ints(&[1, 0, 0]), LatticeClass::from_ints(&[3, 1, 2])];
        prop_assert!(in_k_plus(&a, &q, &ample).unwrap());
        prop_assert!(!in_k_plus(&a.scale(Rational::from_integer(-1)), &q, &ample).unwrap());
    }

    #[test]
    fn minimal_n_is_the_least_satisfying_n(r in 2u32..6, big_r in 1i64..12, delta in 0i64..40, n in 1u64..30) {
        let q = BoundQuery::new(r, Rational::from_integer(big_r), Rational::from_integer(delta), n).unwrap();
        let out = restriction_bound_satisfied(&q);
        prop_assert_eq!(out.satisfied, n >= out.minimal_n);
        let at_min = BoundQuery { n: out.minimal_n, ..q.clone() };
        prop_assert!(restriction_bound_satisfied(&at_min).satisfied);
        if out.minimal_n > 1 {
            let below = BoundQuery { n: out.minimal_n - 1, ..q };
            prop_assert!(!restriction_bound_satisfied(&below).satisfied);
        }
    }
}

#[test]
fn restriction_bound_reference() {
    let q = BoundQuery::new(2, Rational::from_integer(4), Rational::from_integer(3), 4).unwrap();
    let out = restriction_bound_satisfied(&q);
    assert!(out.satisfied);
    assert_eq!(out.minimal_n, 4);
}

fn point(tag: &str) -> BundlePoint {
    BTreeMap::from([("rho".to_string(), tag.to_string())])
}

proptest! {
    #[test]
    fn section_cycle_has_family_size(n in 1usize..20, shared in any::<bool>()) {
        let fibers: Vec<FiberDescriptor> = (0..n)
            .map(|k| {
                let tag = if shared { "m".to_string() } else { format!("m{k}") };
                FiberDescriptor::new(format!("t{k}"), 3, 1).with_point(point(&tag))
            })
            .collect();
        let fam = CurveFamily::new(FamilyMode::ConstantCurve, fibers).unwrap();
        let cycle = cycle_from_constant_family(&section_from_descriptors(fam).unwrap()).unwrap();
        prop_assert_eq!(cycle.len(), n);
    }

    #[test]
    fn unstable_report_ignores_fiber_order(flags in proptest::collection::vec(any::<bool>(), 1..12), rot in 0usize..12) {
        let mut fibers: Vec<FiberDescriptor> = flags
            .iter()
            .enumerate()
            .map(|(k, &s)| FiberDescriptor::new(format!("f{k:02}"), 1, 0).with_stable(s))
            .collect();
        let assign: BTreeMap<String, BundlePoint> =
            fibers.iter().map(|f| (f.parameter.clone(), point("x"))).collect();
        let first = build_section(CurveFamily::new(FamilyMode::Fibration, fibers.clone()).unwrap(), &assign);
        let len = fibers.len();
        fibers.rotate_left(rot % len);
        let second = build_section(CurveFamily::new(FamilyMode::Fibration, fibers).unwrap(), &assign);
        prop_assert_eq!(first.err(), second.err());
    }

    #[test]
    fn parabolic_validation_matches_definition(w in proptest::collection::vec((0i64..12, 1i64..12), 0..6)) {
        let weights: Vec<Rational> = w.iter().map(|&(a, b)| Rational::new(a, b)).collect();
        let p = ParabolicData { multiplicities: vec![1; weights.len()], weights: weights.clone() };
        let expected = weights.windows(2).all(|x| x[0] < x[1])
            && weights.iter().all(|x| *x >= Rational::from_integer(0) && *x < Rational::from_integer(1));
        prop_assert_eq!(validate_parabolic_data(&p).valid, expected);
    }
}
