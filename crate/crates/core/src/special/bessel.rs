//! `J_nu(z)` of complex order and argument.
//!
//! Small arguments use the ascending series, with both the term recurrence
//! and the running sum carried in double-double so that the cancellation
//! of the alternating series costs nothing at double precision. Large
//! arguments use the Hankel asymptotic expansion.

use super::dd::DdComplex;
use super::gamma::rgamma;
use super::PrecisionPolicy;
use crate::{Complex64, Error, Result};
use std::f64::consts::PI;

/// Value paired with an estimated relative error. Along the real
/// oscillatory range the error is relative to the local amplitude.
#[derive(Debug, Clone, Copy)]
pub struct Estimate {
    pub value: Complex64,
    pub rel_err: f64,
}

fn reduce_arg(arg: f64) -> (f64, f64) {
    // arg = theta + 2 pi k with theta in (-pi, pi]
    let mut k = (arg / (2.0 * PI)).round();
    let mut theta = arg - 2.0 * PI * k;
    if theta <= -PI {
        theta += 2.0 * PI;
        k -= 1.0;
    } else if theta > PI {
        theta -= 2.0 * PI;
        k += 1.0;
    }
    (theta, k)
}

fn negative_integer(nu: Complex64) -> Option<i64> {
    if nu.im == 0.0 && nu.re < 0.0 && nu.re == nu.re.round() && nu.re > -1e6 {
        Some(-(nu.re as i64))
    } else {
        None
    }
}

/// Ascending series at `z = modulus * e^{i arg}`; the branch of `(z/2)^nu`
/// follows `arg` as given.
pub fn bessel_j_series(nu: Complex64, modulus: f64, arg: f64) -> Result<Estimate> {
    if let Some(n) = negative_integer(nu) {
        let e = bessel_j_series(Complex64::new(n as f64, 0.0), modulus, arg)?;
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        return Ok(Estimate { value: sign * e.value, rel_err: e.rel_err });
    }
    let pre0 = rgamma(nu + 1.0)?;
    if modulus == 0.0 {
        let v = if nu == Complex64::new(0.0, 0.0) {
            Complex64::new(1.0, 0.0)
        } else if nu.re > 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            return Err(Error::InvalidArgument(format!("J_{nu}(0) is singular")));
        };
        return Ok(Estimate { value: v, rel_err: 0.0 });
    }
    let z = Complex64::from_polar(modulus, arg);
    let zd = DdComplex::from_c64(z);
    let quarter = DdComplex::from_c64(Complex64::new(-0.25, 0.0));
    let q = zd * zd * quarter;
    let nud = DdComplex::from_c64(nu);

    let mut term = DdComplex::from_c64(Complex64::new(1.0, 0.0));
    let mut sum = term;
    let mut abs_sum = 1.0f64;
    let qmag = q.norm();
    let mut k = 0usize;
    loop {
        k += 1;
        let kd = DdComplex::from_c64(Complex64::new(k as f64, 0.0));
        term = term * q / (kd * (nud + kd));
        sum = sum + term;
        let tm = term.norm();
        abs_sum += tm;
        let past_peak = (k * k) as f64 > 2.0 * qmag + nu.norm_sqr();
        if past_peak && tm <= 1e-34 * sum.norm() {
            break;
        }
        if k > 2000 {
            return Err(Error::NonConvergence("J series".into()));
        }
    }
    let s = sum.to_c64();
    let ln_half_z = Complex64::new((modulus / 2.0).ln(), arg);
    let pre = (nu * ln_half_z).exp() * pre0;
    let value = pre * s;
    if !value.re.is_finite() || !value.im.is_finite() {
        return Err(Error::Overflow(z));
    }
    let rel_err = if s.norm() > 0.0 {
        4e-16 + 1e-31 * (k as f64) * abs_sum / s.norm()
    } else {
        f64::INFINITY
    };
    Ok(Estimate { value, rel_err })
}

/// Leading-order Hankel pair `H1_nu(w)`, `H2_nu(w)` from the asymptotic
/// series, each with its own relative truncation error. Intended for
/// `Re w >= 0`.
#[derive(Debug, Clone, Copy)]
pub struct HankelPair {
    pub h1: Complex64,
    pub h2: Complex64,
    pub err1: f64,
    pub err2: f64,
}

pub fn hankel_asymptotic(nu: Complex64, w: Complex64, max_terms: usize) -> HankelPair {
    let s = hankel_asymptotic_scaled(nu, w, max_terms);
    HankelPair { h1: s.h1.value(), h2: s.h2.value(), err1: s.err1, err2: s.err2 }
}

/// `mantissa * exp(exponent)`, for values whose size alone could overflow.
#[derive(Debug, Clone, Copy)]
pub struct Scaled {
    pub mantissa: Complex64,
    pub exponent: Complex64,
}

impl Scaled {
    pub fn plain(v: Complex64) -> Self {
        Scaled { mantissa: v, exponent: Complex64::new(0.0, 0.0) }
    }
    pub fn value(&self) -> Complex64 {
        self.mantissa * self.exponent.exp()
    }
    pub fn mul(&self, o: &Scaled) -> Scaled {
        Scaled { mantissa: self.mantissa * o.mantissa, exponent: self.exponent + o.exponent }
    }
}

/// As [`hankel_asymptotic`] with the exponentials kept apart.
#[derive(Debug, Clone, Copy)]
pub struct ScaledHankelPair {
    pub h1: Scaled,
    pub h2: Scaled,
    pub err1: f64,
    pub err2: f64,
}

pub fn hankel_asymptotic_scaled(nu: Complex64, w: Complex64, max_terms: usize) -> ScaledHankelPair {
    let i = Complex64::new(0.0, 1.0);
    let mu4 = 4.0 * nu * nu;
    let inv_w = 1.0 / w;
    let mut a = Complex64::new(1.0, 0.0);
    let mut s1 = a;
    let mut s2 = a;
    let mut last = f64::INFINITY;
    let mut err = f64::INFINITY;
    let mut ipow = Complex64::new(1.0, 0.0);
    for k in 1..=max_terms {
        let odd = (2 * k - 1) as f64;
        a = a * (mu4 - odd * odd) * inv_w / (8.0 * k as f64);
        let mag = a.norm();
        if mag > last && k > 2 {
            // Divergence has set in; the previous term bounds the error.
            break;
        }
        ipow *= i;
        s1 += ipow * a;
        s2 += ipow.conj() * a;
        last = mag;
        err = mag;
        if mag < 1e-17 {
            break;
        }
    }
    let chi = w - nu * (PI / 2.0) - PI / 4.0;
    let amp = (2.0 / (PI * w)).sqrt();
    ScaledHankelPair {
        h1: Scaled { mantissa: amp * s1, exponent: i * chi },
        h2: Scaled { mantissa: amp * s2, exponent: -i * chi },
        err1: err / s1.norm().max(1e-300),
        err2: err / s2.norm().max(1e-300),
    }
}

/// Hankel asymptotic evaluation of `J_nu` at an arbitrary tracked argument.
pub fn bessel_j_asymptotic(
    nu: Complex64,
    modulus: f64,
    arg: f64,
    max_terms: usize,
) -> Result<Estimate> {
    if let Some(n) = negative_integer(nu) {
        let e = bessel_j_asymptotic(Complex64::new(n as f64, 0.0), modulus, arg, max_terms)?;
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        return Ok(Estimate { value: sign * e.value, rel_err: e.rel_err });
    }
    let i = Complex64::new(0.0, 1.0);
    let (theta, k) = reduce_arg(arg);
    // J(z e^{2 pi i k}) = e^{2 pi i k nu} J(z)
    let mut factor = (2.0 * PI * k * i * nu).exp();
    // Rotate into the right half plane: J(z' e^{+-i pi}) = e^{+-i pi nu} J(z').
    let theta_r = if theta > PI / 2.0 {
        factor *= (i * PI * nu).exp();
        theta - PI
    } else if theta < -PI / 2.0 {
        factor *= (-i * PI * nu).exp();
        theta + PI
    } else {
        theta
    };
    let w = Complex64::from_polar(modulus, theta_r);
    let hp = hankel_asymptotic(nu, w, max_terms);
    let j = 0.5 * (hp.h1 + hp.h2);
    let abs_err = 0.5 * (hp.h1.norm() * hp.err1 + hp.h2.norm() * hp.err2);
    let value = factor * j;
    if !value.re.is_finite() || !value.im.is_finite() {
        return Err(Error::Overflow(w));
    }
    // Measured against the local envelope (|H1| + |H2|) / 2 so that values
    // next to real zeros are not rejected for a tiny denominator.
    let scale = j.norm().max(0.5 * (hp.h1.norm() + hp.h2.norm()));
    Ok(Estimate {
        value,
        rel_err: 4e-16 + abs_err / scale.max(1e-300),
    })
}

/// `J_nu(z)` on the principal branch of `z^nu`.
pub fn bessel_j(nu: Complex64, z: Complex64) -> Result<Complex64> {
    bessel_j_tracked(nu, z.norm(), z.arg(), &PrecisionPolicy::default())
}

/// `J_nu(z)` with `z = modulus * e^{i arg}` and `z^nu` continued along the
/// given argument, which is not reduced first.
pub fn bessel_j_tracked(
    nu: Complex64,
    modulus: f64,
    arg: f64,
    policy: &PrecisionPolicy,
) -> Result<Complex64> {
    bessel_j_estimate(nu, modulus, arg, policy).and_then(|e| {
        if e.rel_err <= policy.target_rel_tol {
            Ok(e.value)
        } else {
            Err(Error::AccuracyLoss { estimate: e.value, rel_err: e.rel_err })
        }
    })
}

/// Best available estimate together with its error, never failing on
/// accuracy alone.
pub fn bessel_j_estimate(
    nu: Complex64,
    modulus: f64,
    arg: f64,
    policy: &PrecisionPolicy,
) -> Result<Estimate> {
    if nu.re.is_nan() || nu.im.is_nan() || modulus.is_nan() || arg.is_nan() {
        return Err(Error::NotANumber("bessel_j"));
    }
    let cutoff = policy.cutoff_for(nu);
    let (first, second): (Result<Estimate>, Option<Result<Estimate>>) = if modulus <= cutoff {
        let s = bessel_j_series(nu, modulus, arg);
        match &s {
            Ok(e) if e.rel_err <= policy.target_rel_tol => (s, None),
            _ if modulus > 0.0 => {
                let a = bessel_j_asymptotic(nu, modulus, arg, policy.asymptotic_terms);
                (s, Some(a))
            }
            _ => (s, None),
        }
    } else {
        let a = bessel_j_asymptotic(nu, modulus, arg, policy.asymptotic_terms);
        match &a {
            Ok(e) if e.rel_err <= policy.target_rel_tol => (a, None),
            _ => {
                let s = bessel_j_series(nu, modulus, arg);
                (a, Some(s))
            }
        }
    };
    match (first, second) {
        (r, None) => r,
        (Ok(a), Some(Ok(b))) => Ok(if a.rel_err <= b.rel_err { a } else { b }),
        (Ok(a), Some(Err(_))) => Ok(a),
        (Err(_), Some(r)) => r,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn j0_at_zero() {
        assert_eq!(bessel_j(c(0.0, 0.0), c(0.0, 0.0)).unwrap(), c(1.0, 0.0));
    }

    #[test]
    fn half_order_closed_form() {
        for &x in &[0.3, 2.0, 17.0, 40.0, 90.0] {
            let v = bessel_j(c(0.5, 0.0), c(x, 0.0)).unwrap();
            let exact = (2.0 / (PI * x)).sqrt() * x.sin();
            assert!((v.re - exact).abs() < 1e-13 * (2.0 / (PI * x)).sqrt(), "x={x}");
            assert!(v.im.abs() < 1e-14);
        }
    }

    #[test]
    fn complex_reference() {
        // mpmath besselj(0.3+0.1j, 2-1j), 50 digits
        let v = bessel_j(c(0.3, 0.1), c(2.0, -1.0)).unwrap();
        let r = c(REF_RE, REF_IM);
        assert!((v - r).norm() < 1e-13 * r.norm(), "{v}");
    }

    const REF_RE: f64 = 0.576_406_093_480_930_1;
    const REF_IM: f64 = 0.641_298_372_922_439_6;

    #[test]
    fn negative_integer_order() {
        let a = bessel_j(c(-3.0, 0.0), c(2.5, 0.7)).unwrap();
        let b = bessel_j(c(3.0, 0.0), c(2.5, 0.7)).unwrap();
        assert!((a + b).norm() < 1e-15 * b.norm());
    }

    #[test]
    fn regimes_agree_at_cutoff() {
        let p = PrecisionPolicy::default();
        for &(nu, th) in &[(c(0.0, 0.0), 0.3), (c(0.7, -0.4), 2.5), (c(-1.3, 0.2), -1.0)] {
            let r = p.cutoff_for(nu);
            let s = bessel_j_series(nu, r, th).unwrap();
            let a = bessel_j_asymptotic(nu, r, th, p.asymptotic_terms).unwrap();
            assert!((s.value - a.value).norm() < 1e-12 * s.value.norm(), "{nu} {th}");
        }
    }

    #[test]
    fn tracked_argument_picks_up_monodromy() {
        let p = PrecisionPolicy::default();
        let nu = c(0.3, 0.2);
        let a = bessel_j_tracked(nu, 3.0, 0.4, &p).unwrap();
        let b = bessel_j_tracked(nu, 3.0, 0.4 + 2.0 * PI, &p).unwrap();
        let f = (2.0 * PI * c(0.0, 1.0) * nu).exp();
        assert!((b - f * a).norm() < 1e-13 * b.norm());
        let a = bessel_j_tracked(nu, 60.0, 0.4, &p).unwrap();
        let b = bessel_j_tracked(nu, 60.0, 0.4 - 4.0 * PI, &p).unwrap();
        let f = (-4.0 * PI * c(0.0, 1.0) * nu).exp();
        assert!((b - f * a).norm() < 1e-13 * b.norm());
    }
}
