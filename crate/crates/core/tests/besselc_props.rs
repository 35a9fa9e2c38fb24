use cbessel::besselc::{
    bessel_big, bessel_big_estimate_delta, bessel_big_oddnormalized, envelope_slope,
    envelope_slope_on,
    BranchedPoint, RepParam, Regime, Route, SlopeGrid,
};
use cbessel::Complex64;
use proptest::prelude::*;
use std::f64::consts::PI;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn unitary_mu() -> impl Strategy<Value = (Complex64, i32)> {
    prop_oneof![
        (-0.6f64..0.6, prop::sample::select(vec![-4, -2, 0, 2, 4])).prop_map(|(t, m)| (c(0.0, t), m)),
        (0.01f64..0.49).prop_map(|s| (c(s, 0.0), 0)),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn dual_parameter_symmetry((mu, m) in unitary_mu(), lr in (0.1f64).ln()..(100f64).ln(), th in -PI..PI) {
        let p = RepParam::gl2(mu, m);
        let z = BranchedPoint::new(lr.exp(), th);
        let a = bessel_big(&p, z).unwrap();
        let b = bessel_big(&p.dual(), z).unwrap();
        prop_assert!((a - b).norm() < 1e-10 * a.norm().max(1e-300), "{a} {b}");
    }

    #[test]
    fn even_branch_invariance((mu, m) in unitary_mu(), lr in (0.01f64).ln()..(100f64).ln(), th in -PI..PI, k in -3i32..3) {
        let p = RepParam::gl2(mu, m);
        let z = BranchedPoint::new(lr.exp(), th);
        let a = bessel_big(&p, z).unwrap();
        let b = bessel_big(&p, z.rotated(k)).unwrap();
        prop_assert!((a - b).norm() <= 1e-10 * a.norm());
    }

    #[test]
    fn odd_normalized_branch_invariance(t in -0.6f64..0.6, m in prop::sample::select(vec![-3, -1, 1, 3]),
                                        lr in (0.01f64).ln()..(100f64).ln(), th in -PI..PI, k in -3i32..3) {
        let p = RepParam::gl2(c(0.0, t), m);
        let z = BranchedPoint::new(lr.exp(), th);
        let a = bessel_big_oddnormalized(&p, z).unwrap();
        let b = bessel_big_oddnormalized(&p, z.rotated(k)).unwrap();
        prop_assert!((a - b).norm() <= 1e-10 * a.norm());
        // and the odd combination is symmetric under (mu, m) -> (-mu, -m)
        let d = bessel_big_oddnormalized(&p.dual(), z).unwrap();
        prop_assert!((a - d).norm() <= 1e-10 * a.norm());
    }
}

#[test]
fn nongeneric_limit_is_stable_across_steps() {
    for &(mu, m) in &[(c(0.0, 0.0), 0), (c(0.0, 0.0), 2), (c(0.5, 0.0), 0), (c(0.25, 0.0), 1)] {
        let p = RepParam::gl2(mu, m);
        for &z in &[c(1.0, 0.0), c(0.3, 0.01), c(2.0, -0.1), c(0.01, 0.0)] {
            let z = BranchedPoint::from_complex(z);
            let vals: Vec<Complex64> = [1e-2, 5e-3, 2.5e-3]
                .iter()
                .map(|&d| {
                    let (e, r) = bessel_big_estimate_delta(&p, z, d).unwrap();
                    assert_eq!(r, Route::Limit);
                    e.value
                })
                .collect();
            for v in &vals[1..] {
                assert!((v - vals[0]).norm() < 1e-6 * vals[0].norm(), "{p:?} {z:?} {vals:?}");
            }
        }
    }
}

#[test]
fn approach_to_nongeneric_point_is_at_least_linear() {
    // |limit value - value at mu0 + delta| = O(delta): halving delta at
    // least halves the gap.
    for &(mu0, m) in &[(c(0.0, 0.0), 0), (c(0.0, 0.0), 2), (c(0.25, 0.0), 1)] {
        let p0 = RepParam::gl2(mu0, m);
        let z = BranchedPoint::from_complex(c(0.7, 0.05));
        let lim = bessel_big(&p0, z).unwrap();
        let gap = |d: f64| {
            let v = bessel_big(&RepParam::gl2(mu0 + d, m), z).unwrap();
            (v - lim).norm()
        };
        let ratio = gap(4e-2) / gap(2e-2);
        assert!(ratio > 1.9, "{mu0} {m}: ratio {ratio}");
    }
}

/// `rho` must exceed `|Re mu|`; the window `[1e-3, 1]` has not yet reached
/// the small-argument asymptotics, so `rho` is not taken below 0.3.
pub fn adapted_rho(mu: Complex64) -> f64 {
    (mu.re.abs() + 0.05).max(0.3)
}

#[test]
fn small_regime_slopes() {
    let g = SlopeGrid::default();
    for (mu, m) in [(c(0.25, 0.0), 0), (c(0.0, 0.0), 0), (c(0.0, 0.3), 2), (c(0.4, 0.0), 0), (c(0.0, 0.2), 0)] {
        let s = envelope_slope(&RepParam::gl2(mu, m), Regime::Small, g).unwrap();
        assert!(s >= -2.0 * adapted_rho(mu) - 0.1, "{mu} {m}: slope {s}");
    }
}

#[test]
fn deep_small_regime_matches_power_law() {
    // For real mu the leading term is |z|^{-2 mu}.
    let g = SlopeGrid::default();
    for mu in [0.25, 0.4] {
        let s = envelope_slope_on(&RepParam::gl2(c(mu, 0.0), 0), -8.0, -5.0, g).unwrap();
        assert!((s + 2.0 * mu).abs() < 0.01, "{mu}: slope {s}");
    }
}

#[test]
fn large_regime_slopes() {
    let g = SlopeGrid::default();
    for p in [RepParam::gl2(c(0.0, 0.3), 2), RepParam::gl2(c(0.0, 0.0), 0), RepParam::gl2(c(0.25, 0.0), 0)] {
        let s = envelope_slope(&p, Regime::Large, g).unwrap();
        assert!((-0.6..=-0.4).contains(&s), "{p:?} slope {s}");
    }
}

#[test]
fn origin_parameter_slope_regression() {
    // Frozen from the build-time run with the default grid.
    let g = SlopeGrid::default();
    let p = RepParam::gl2(c(0.0, 0.0), 0);
    let small = envelope_slope(&p, Regime::Small, g).unwrap();
    let large = envelope_slope(&p, Regime::Large, g).unwrap();
    assert!((small + 0.5021).abs() < 5e-3, "{small}");
    assert!((large + 0.4941).abs() < 5e-3, "{large}");
}
