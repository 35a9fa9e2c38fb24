use std::f64::consts::PI;
use cbessel::group::{
    bruhat_decompose_g, bruhat_decompose_s, AdditiveCharacter, BruhatCoordsG, BruhatCoordsS,
    GroupElement,
};
use cbessel::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rc(rng: &mut ChaCha8Rng, r: f64) -> Complex64 {
    Complex64::new(rng.gen_range(-r..r), rng.gen_range(-r..r))
}

fn nonzero(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::from_polar(rng.gen_range(0.1..5.0), rng.gen_range(-PI..PI))
}

#[test]
fn decompose_recompose_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..1000 {
        let g = GroupElement::new(rc(&mut rng, 3.0), rc(&mut rng, 3.0), nonzero(&mut rng), rc(&mut rng, 3.0));
        let Ok(g) = g else { continue };
        let b = bruhat_decompose_g(&g).unwrap();
        assert!(b.recompose().rel_distance(&g) < 1e-12);

        let bs = BruhatCoordsS { x: rc(&mut rng, 3.0), a: nonzero(&mut rng), y: rc(&mut rng, 3.0) };
        let h = bs.recompose();
        assert!((h.det() - 1.0).norm() < 1e-12);
        let back = bruhat_decompose_s(&h).unwrap();
        assert!(back.recompose().rel_distance(&h) < 1e-12);
    }
}

#[test]
fn left_and_right_translation_shift_coordinates() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let b = BruhatCoordsG { x: rc(&mut rng, 2.0), c: nonzero(&mut rng), a: nonzero(&mut rng), y: rc(&mut rng, 2.0) };
        let g = b.recompose();
        let (u, v, c2) = (rc(&mut rng, 2.0), rc(&mut rng, 2.0), nonzero(&mut rng));
        let moved = GroupElement::n(u) * GroupElement::z(c2) * g * GroupElement::n(v);
        let m = bruhat_decompose_g(&moved).unwrap();
        // n(u) z(c2) n(x) = n(u + x) z(c2), and z is central.
        let tol = 1e-12 * (1.0 + b.x.norm() + u.norm() + b.y.norm() + v.norm());
        assert!((m.x - (b.x + u)).norm() < tol);
        assert!((m.y - (b.y + v)).norm() < tol);
        assert!((m.c - b.c * c2).norm() < 1e-12 * (b.c * c2).norm());
        assert!((m.a - b.a).norm() < 1e-12 * b.a.norm());
    }
}

proptest! {
    #[test]
    fn character_is_unitary_and_additive(lr in -3.0f64..3.0, li in -3.0f64..3.0, a in -5.0f64..5.0, b in -5.0f64..5.0,
                                         c in -5.0f64..5.0, d in -5.0f64..5.0) {
        prop_assume!(lr != 0.0 || li != 0.0);
        let chi = AdditiveCharacter::new(Complex64::new(lr, li)).unwrap();
        let z = Complex64::new(a, b);
        let w = Complex64::new(c, d);
        prop_assert!((chi.psi(z).norm() - 1.0).abs() < 1e-15);
        prop_assert!((chi.psi(z + w) - chi.psi(z) * chi.psi(w)).norm() < 1e-12);
    }
}
