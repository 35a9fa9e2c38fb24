use cbessel::identities::{l_rescaling_drift, verify_bessel_identity_point, verify_hardy, IdentityPoint, Sign};
use cbessel::Complex64;
use proptest::prelude::*;
use std::f64::consts::PI;

fn polar(lr: f64, th: f64) -> Complex64 {
    Complex64::from_polar(lr.exp(), th)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn bessel_identity_holds_off_the_sampler(
        t in -2.0f64..2.0, m in prop::sample::select(vec![-2, 0, 2, 4]),
        ll in -1.5f64..1.5, lt in -PI..PI, dl in -1.5f64..1.5, dt in -PI..PI, zl in -4.0f64..4.0, zt in -PI..PI,
    ) {
        let pt = IdentityPoint { mu: Complex64::new(0.0, t), m, lambda: polar(ll, lt), d: polar(dl, dt), z: polar(zl, zt) };
        let r = verify_bessel_identity_point(&pt);
        prop_assert!(r.passed(), "{r:?}");
        prop_assert!(l_rescaling_drift(&pt, Complex64::new(-0.3, 4.0)).unwrap() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn hardy_on_random_orders(a in -0.8f64..0.8, b in -0.5f64..0.5, y in 0.5f64..2.0, plus in any::<bool>()) {
        let r = verify_hardy(Complex64::new(a, b), y, if plus { Sign::Plus } else { Sign::Minus }).unwrap();
        prop_assert!(r.passed(), "{r:?}");
    }
}
