//! Modified Bessel function `K_nu` via its integral representation
//!
//! `K_nu(zeta) = int_0^inf exp(-zeta cosh t) cosh(nu t) dt`, `Re zeta > 0`,
//!
//! evaluated by the trapezoidal rule. The integrand is entire and decays
//! doubly exponentially, so the rule converges geometrically in `1/h` with
//! rate set by the width of the strip on which the decay persists.

use super::bessel::Estimate;
use super::PrecisionPolicy;
use crate::{Complex64, Error, Result};
use std::f64::consts::PI;

/// `K_nu` is even in `nu`; evaluating on one representative makes the
/// parity exact in floating point.
fn canonical_order(nu: Complex64) -> Complex64 {
    if nu.re < 0.0 || (nu.re == 0.0 && nu.im < 0.0) {
        -nu
    } else {
        nu
    }
}

fn truncation_point(re_zeta: f64, re_nu: f64) -> f64 {
    let excess = |t: f64| re_zeta * (t.cosh() - 1.0) - re_nu.abs() * t - 45.0;
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while excess(hi) < 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > 700.0 {
            return 700.0;
        }
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if excess(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// `K_nu(zeta)` for complex `zeta` with `|arg zeta| < pi/2`.
pub fn bessel_k_complex(nu: Complex64, zeta: Complex64) -> Result<Estimate> {
    if nu.re.is_nan() || nu.im.is_nan() || zeta.re.is_nan() || zeta.im.is_nan() {
        return Err(Error::NotANumber("bessel_k"));
    }
    if zeta.re <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "K integral needs Re zeta > 0, got {zeta}"
        )));
    }
    let nu = canonical_order(nu);
    let strip = (PI / 2.0 - zeta.arg().abs()).min(1.4);
    if strip < 0.02 {
        return Err(Error::InvalidArgument(format!(
            "zeta = {zeta} too close to the imaginary axis"
        )));
    }
    // Near t = 0 the integrand behaves like exp(-zeta t^2 / 2); resolve that
    // width as well as the strip.
    let h = (0.157 * strip).min(0.7 / zeta.norm().sqrt());
    let t_max = truncation_point(zeta.re, nu.re);
    let f = |t: f64| (-zeta * t.cosh()).exp() * (nu * t).cosh();

    let n = (t_max / h).ceil() as usize;
    let mut coarse = 0.5 * f(0.0);
    for k in 1..=n {
        coarse += f(k as f64 * h);
    }
    let mut mid = Complex64::new(0.0, 0.0);
    for k in 0..n {
        mid += f((k as f64 + 0.5) * h);
    }
    let coarse_v = coarse * h;
    let fine_v = 0.5 * coarse_v + mid * (0.5 * h);
    let scale = fine_v.norm();
    if !scale.is_finite() {
        return Err(Error::Overflow(zeta));
    }
    let rel_err = ((coarse_v - fine_v).norm() / scale).max(1e-16);
    Ok(Estimate { value: fine_v, rel_err })
}

/// `K_nu(x)` for real `x > 0` and complex order.
pub fn bessel_k(nu: Complex64, x: f64) -> Result<Complex64> {
    if !(x > 0.0) {
        return Err(Error::InvalidArgument(format!("K_nu(x) needs x > 0, got {x}")));
    }
    let policy = PrecisionPolicy::default();
    let e = bessel_k_complex(nu, Complex64::new(x, 0.0))?;
    if e.rel_err <= policy.target_rel_tol {
        Ok(e.value)
    } else {
        Err(Error::AccuracyLoss { estimate: e.value, rel_err: e.rel_err })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn half_order_closed_form() {
        for &x in &[1e-6, 0.01, 0.5, 3.0, 40.0] {
            let v = bessel_k(c(0.5, 0.0), x).unwrap();
            let exact = (PI / (2.0 * x)).sqrt() * (-x).exp();
            assert!((v - exact).norm() < 1e-13 * exact, "x={x} {v} {exact}");
        }
    }

    #[test]
    fn parity_is_exact() {
        let nu = c(0.3, -0.8);
        assert_eq!(bessel_k(nu, 2.2).unwrap(), bessel_k(-nu, 2.2).unwrap());
    }

    #[test]
    fn imaginary_order_reference() {
        // mpmath besselk(0.25j, 3)
        let v = bessel_k(c(0.0, 0.25), 3.0).unwrap();
        let r = REF;
        assert!((v.re - r).abs() < 1e-13 * r && v.im.abs() < 1e-15, "{v}");
    }

    const REF: f64 = 0.034_424_629_291_960_447;

    #[test]
    fn complex_argument_reference() {
        // mpmath besselk(0.3+0.2j, 3-12j)
        let v = bessel_k_complex(c(0.3, 0.2), c(3.0, -12.0)).unwrap();
        let r = c(REF2_RE, REF2_IM);
        assert!((v.value - r).norm() < 1e-12 * r.norm(), "{}", v.value);
    }

    const REF2_RE: f64 = 0.017_549_591_786_220_114;
    const REF2_IM: f64 = 0.001_587_338_560_919_463_5;
}
