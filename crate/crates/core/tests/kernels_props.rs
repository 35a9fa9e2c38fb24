use cbessel::besselc::{BranchedPoint, RepParam};
use cbessel::group::{AdditiveCharacter, GroupElement};
use cbessel::kernels::{
    bessel_identity_sides_branched, bessel_identity_sides_with_l, bessel_j_g, bessel_j_s,
    relative_bessel_i, relative_residual, KernelSpec,
};
use cbessel::Complex64;
use proptest::prelude::*;
use std::f64::consts::PI;

fn cx() -> impl Strategy<Value = Complex64> {
    (0.2f64..3.0, -PI..PI).prop_map(|(r, t)| Complex64::from_polar(r, t))
}

fn small_cx() -> impl Strategy<Value = Complex64> {
    (-1.5f64..1.5, -1.5f64..1.5).prop_map(|(a, b)| Complex64::new(a, b))
}

fn spec_any_m() -> impl Strategy<Value = KernelSpec> {
    (-0.5f64..0.5, -3i32..=3, cx()).prop_map(|(t, m, lam)| {
        KernelSpec::new(RepParam::gl2(Complex64::new(0.0, t), m), AdditiveCharacter::new(lam).unwrap())
    })
}

fn spec_even() -> impl Strategy<Value = KernelSpec> {
    prop_oneof![
        (-0.5f64..0.5, prop::sample::select(vec![-2, 0, 2])).prop_map(|(t, m)| (Complex64::new(0.0, t), m)),
        (0.02f64..0.48).prop_map(|s| (Complex64::new(s, 0.0), 0)),
    ]
    .prop_flat_map(|(mu, m)| {
        cx().prop_map(move |lam| KernelSpec::new(RepParam::gl2(mu, m), AdditiveCharacter::new(lam).unwrap()))
    })
}

fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
    (a - b).norm() <= tol * a.norm().max(b.norm()).max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn gl2_bi_equivariance(k in spec_any_m(), a in cx(), c in cx(), x in small_cx(), y in small_cx(),
                           u in small_cx(), v in small_cx()) {
        let g = GroupElement::n(x) * GroupElement::z(c) * GroupElement::t(a) * GroupElement::w0() * GroupElement::n(y);
        let base = bessel_j_g(&k, &g).unwrap().value;
        let moved = GroupElement::n(u) * g * GroupElement::n(v);
        let lhs = bessel_j_g(&k, &moved).unwrap().value;
        let rhs = k.chi.psi(u) * k.chi.psi(v) * base;
        prop_assert!(close(lhs, rhs, 1e-10), "{lhs} {rhs}");
        // central character: trivial for even m, c/|c| for odd m
        let central = bessel_j_g(&k, &(GroupElement::z(c) * g)).unwrap().value;
        let omega = if k.rep.m % 2 == 0 { Complex64::new(1.0, 0.0) } else { c / c.norm() };
        prop_assert!(close(central, omega * base, 1e-10));
    }

    #[test]
    fn sl2_equivariance(k in spec_any_m(), a in cx(), x in small_cx(), y in small_cx(), u in small_cx(), v in small_cx()) {
        let ks = KernelSpec::new(RepParam::sl2(k.rep.mu, k.rep.m), k.chi);
        let g = GroupElement::n(x) * GroupElement::s(a) * GroupElement::w() * GroupElement::n(y);
        let base = bessel_j_s(&ks, &g).unwrap().value;
        let lhs = bessel_j_s(&ks, &(GroupElement::n(u) * g * GroupElement::n(v))).unwrap().value;
        prop_assert!(close(lhs, k.chi.psi(u) * k.chi.psi(v) * base, 1e-10));
    }

    #[test]
    fn restriction_to_sl2(k in spec_any_m(), a in cx(), x in small_cx(), y in small_cx()) {
        let g = GroupElement::n(x) * GroupElement::s(a) * GroupElement::w() * GroupElement::n(y);
        let on_g = bessel_j_g(&k, &g).unwrap().value;
        let on_s = bessel_j_s(&k, &g).unwrap().value;
        prop_assert!(close(on_g, on_s, 1e-10), "{on_g} {on_s}");
    }

    #[test]
    fn relative_bessel_invariances(k in spec_even(), a in cx(), b in cx(), c in cx(), x in cx(), y in small_cx(), v in small_cx()) {
        let g = GroupElement::t(a) * GroupElement::z(c) * GroupElement::n(x) * GroupElement::w0() * GroupElement::n(y);
        let base = relative_bessel_i(&k, &g).unwrap().value;
        let left = relative_bessel_i(&k, &(GroupElement::t(b) * g)).unwrap().value;
        prop_assert!(close(left, base, 1e-10));
        let right = relative_bessel_i(&k, &(g * GroupElement::n(v))).unwrap().value;
        prop_assert!(close(right, k.chi.psi(v) * base, 1e-10));
    }

    #[test]
    fn identity_is_branch_robust(k in spec_even(), d in cx(), zr in 0.05f64..20.0, th in -PI..PI, turns in -2i32..=2) {
        let z = BranchedPoint::new(zr, th);
        let (l0, r0) = bessel_identity_sides_branched(&k, d, z).unwrap();
        let (l1, r1) = bessel_identity_sides_branched(&k, d, z.rotated(turns)).unwrap();
        let e0 = relative_residual(l0, r0).unwrap();
        let e1 = relative_residual(l1, r1).unwrap();
        prop_assert!(e0 < 1e-9);
        prop_assert!((e0 - e1).abs() < 1e-12, "{e0} {e1}");
    }

    #[test]
    fn l_convention_cancels(k in spec_even(), d in cx(), z in cx(), scale in 0.01f64..100.0) {
        let l = cbessel::group::l_factor(&k.rep, Complex64::new(0.5, 0.0)).unwrap();
        let (a, b) = bessel_identity_sides_with_l(&k, d, z, l).unwrap();
        let (c, e) = bessel_identity_sides_with_l(&k, d, z, l * scale).unwrap();
        let r0 = relative_residual(a, b).unwrap();
        let r1 = relative_residual(c, e).unwrap();
        prop_assert!((r0 - r1).abs() < 1e-12);
    }
}
