//! Bessel functions of representations.
//!
//! * `j` on `GL2`, supported on the big cell `N A w0 N` and determined by
//!   its values on `t(a) w0` together with left/right `(psi, N)` and central
//!   equivariance.
//! * `j` on `SL2`, determined by its values on `s(a) w`.
//! * The relative Bessel function `i`, supported on `U = A (N - {1}) w0 N`,
//!   left `A`-invariant and right `(psi, N)`-equivariant.
//!
//! For odd `m` the value of `bold J` depends on the sheet of its argument.
//! Arguments are composed from the arguments of `lambda`, `a`, `x` without
//! wrapping (e.g. `arg(lambda^2 a^2) = 2 arg lambda + 2 arg a`), which makes
//! every kernel single valued in the group variable.

use crate::besselc::{bessel_big, BranchedPoint, GroupTag, RepParam};
use crate::group::{
    bruhat_decompose_g, bruhat_decompose_s, e, epsilon_factor, l_factor, transfer_factor,
    AdditiveCharacter, GroupElement,
};
use crate::{Complex64, Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const HALF: Complex64 = Complex64 { re: 0.5, im: 0.0 };

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub rep: RepParam,
    pub chi: AdditiveCharacter,
}

impl KernelSpec {
    pub fn new(rep: RepParam, chi: AdditiveCharacter) -> Self {
        KernelSpec { rep, chi }
    }

    fn is_odd(&self) -> bool {
        self.rep.m.rem_euclid(2) == 1
    }

    /// The `SL2` partner `sigma_{mu/2, m/2}` with the character `psi^D`.
    pub fn partner(&self, d: Complex64) -> Result<KernelSpec> {
        if self.is_odd() {
            return Err(Error::OddM("partner representation", self.rep.m));
        }
        Ok(KernelSpec {
            rep: RepParam { mu: self.rep.mu / 2.0, m: self.rep.m / 2, group: GroupTag::SL2 },
            chi: self.chi.twisted(d),
        })
    }
}

/// Kernel value together with whether the point lies in the support cell.
/// Off the cell the value is exactly zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelValue {
    pub value: Complex64,
    pub in_cell: bool,
}

impl KernelValue {
    fn off_cell() -> Self {
        KernelValue { value: ZERO, in_cell: false }
    }

    fn on_cell(value: Complex64) -> Self {
        KernelValue { value, in_cell: true }
    }
}

/// `j(t(a) w0)` on `GL2`.
pub fn j_torus(k: &KernelSpec, a: Complex64) -> Result<Complex64> {
    let lam = k.chi.lambda;
    let z = BranchedPoint::new(lam.norm_sqr() * a.norm(), PI + 2.0 * lam.arg() + a.arg());
    if !k.is_odd() {
        return Ok((lam * a).norm() * bessel_big(&k.rep, z)?);
    }
    // -i |lambda| sqrt(|a| a) bold J(-lambda^2 a) with the square root and
    // bold J on matching sheets equals -|a| conj(lambda) sqrt(z/|z|) bold J.
    let half_sqrt = Complex64::from_polar(1.0, a.arg() / 2.0);
    let root = a.norm() * half_sqrt;
    Ok(Complex64::new(0.0, -1.0) * lam.norm() * root * bessel_big(&k.rep, z)?)
}

/// `j_{pi,psi}(g)` on `GL2`, zero off the big cell.
pub fn bessel_j_g(k: &KernelSpec, g: &GroupElement) -> Result<KernelValue> {
    let b = match bruhat_decompose_g(g) {
        Ok(b) => b,
        Err(Error::NotInBigCell) => return Ok(KernelValue::off_cell()),
        Err(e) => return Err(e),
    };
    let omega = if k.is_odd() { b.c / b.c.norm() } else { Complex64::new(1.0, 0.0) };
    let v = k.chi.psi(b.x) * k.chi.psi(b.y) * omega * j_torus(k, b.a)?;
    Ok(KernelValue::on_cell(v))
}

/// `j(s(a) w) = (-1)^m |lambda a^2| bold J(lambda^2 a^2)` on `SL2`.
pub fn j_sl2_torus(k: &KernelSpec, a: Complex64) -> Result<Complex64> {
    j_sl2_torus_branched(k, BranchedPoint::from_complex(a))
}

/// As [`j_sl2_torus`] with `a` on an explicit sheet.
pub fn j_sl2_torus_branched(k: &KernelSpec, a: BranchedPoint) -> Result<Complex64> {
    let lam = k.chi.lambda;
    let scale = lam.norm() * a.modulus * a.modulus;
    let z = BranchedPoint::new(scale * lam.norm(), 2.0 * lam.arg() + 2.0 * a.argument);
    let sign = if k.is_odd() { -1.0 } else { 1.0 };
    Ok(sign * scale * bessel_big(&k.rep, z)?)
}

/// `j_{sigma,psi}(g)` for `g` in `SL2`, zero off the big cell.
pub fn bessel_j_s(k: &KernelSpec, g: &GroupElement) -> Result<KernelValue> {
    if !g.is_sl2() {
        return Err(Error::InvalidArgument(format!("det g = {} is not 1", g.det())));
    }
    let b = match bruhat_decompose_s(g) {
        Ok(b) => b,
        Err(Error::NotInBigCell) => return Ok(KernelValue::off_cell()),
        Err(e) => return Err(e),
    };
    let v = k.chi.psi(b.x) * k.chi.psi(b.y) * j_sl2_torus(k, b.a)?;
    Ok(KernelValue::on_cell(v))
}

/// `i(n(x) w0)` with an explicit value for `L(pi, 1/2)`.
pub fn relative_i_nx_with_l(k: &KernelSpec, x: Complex64, l_half: Complex64) -> Result<Complex64> {
    if x == ZERO {
        return Ok(ZERO);
    }
    relative_i_nx_branched(k, BranchedPoint::from_complex(x), l_half)
}

/// As [`relative_i_nx_with_l`] with `x` on an explicit sheet.
pub fn relative_i_nx_branched(k: &KernelSpec, x: BranchedPoint, l_half: Complex64) -> Result<Complex64> {
    if k.is_odd() {
        return Err(Error::OddM("relative Bessel function", k.rep.m));
    }
    if x.modulus == 0.0 {
        return Ok(ZERO);
    }
    let lam = k.chi.lambda;
    let sigma = RepParam { mu: k.rep.mu / 2.0, m: k.rep.m / 2, group: k.rep.group };
    let u = lam / (2.0 * x.to_complex());
    let z = BranchedPoint::new(u.norm_sqr() / 4.0, 2.0 * lam.arg() - 2.0 * x.argument);
    Ok(e(2.0 * u.re) * u.norm() * bessel_big(&sigma, z)? / l_half)
}

/// `i(n(x) w0) = e(Tr(lambda/2x)) |lambda/2x| bold J_{mu/2,m/2}(lambda^2/16x^2) / L(pi, 1/2)`.
pub fn relative_i_nx(k: &KernelSpec, x: Complex64) -> Result<Complex64> {
    relative_i_nx_with_l(k, x, l_factor(&k.rep, HALF)?)
}

/// `g = t(a) z(c) n(x) w0 n(y)`, the coordinates used on `U`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnCoords {
    pub a: Complex64,
    pub c: Complex64,
    pub x: Complex64,
    pub y: Complex64,
}

/// Decompose `g = t(a) z(c) n(x) w0 n(y)`; `None` off the big cell.
pub fn an_decompose(g: &GroupElement) -> Option<AnCoords> {
    if !g.in_big_cell() {
        return None;
    }
    let c = g.g21;
    let a = -g.det() / (c * c);
    Some(AnCoords { a, c, x: g.g11 / (c * a), y: g.g22 / c })
}

/// `i_{pi,psi}(g)`, zero off `U`.
pub fn relative_bessel_i(k: &KernelSpec, g: &GroupElement) -> Result<KernelValue> {
    relative_bessel_i_with_l(k, g, l_factor(&k.rep, HALF)?)
}

pub fn relative_bessel_i_with_l(k: &KernelSpec, g: &GroupElement, l_half: Complex64) -> Result<KernelValue> {
    let Some(b) = an_decompose(g) else { return Ok(KernelValue::off_cell()) };
    if b.x == ZERO {
        return Ok(KernelValue::off_cell());
    }
    let v = k.chi.psi(b.y) * relative_i_nx_with_l(k, b.x, l_half)?;
    Ok(KernelValue::on_cell(v))
}

/// Both sides of the Bessel identity at `z`, with `L(pi, 1/2)` supplied.
///
/// `lhs = i_{pi,psi}(n(z/4D) w0)` and
/// `rhs = 4 Delta_{D,psi}(z) epsilon(pi,1/2,psi) / L(pi,1/2) * |D| * j_{sigma,psi^D}(w s(z))`.
pub fn bessel_identity_sides_with_l(
    k: &KernelSpec,
    d: Complex64,
    z: Complex64,
    l_half: Complex64,
) -> Result<(Complex64, Complex64)> {
    if z == ZERO || d == ZERO {
        return Err(Error::InvalidArgument("Bessel identity needs z, D nonzero".into()));
    }
    let g_left = GroupElement::n(z / (4.0 * d)) * GroupElement::w0();
    let lhs = relative_bessel_i_with_l(k, &g_left, l_half)?.value;
    let sigma = k.partner(d)?;
    let g_right = GroupElement::w() * GroupElement::s(z);
    let jr = bessel_j_s(&sigma, &g_right)?.value;
    let eps = epsilon_factor(&k.rep, HALF, &k.chi)?;
    let rhs = 4.0 * transfer_factor(d, &k.chi, z)? * eps / l_half * d.norm() * jr;
    Ok((lhs, rhs))
}

/// Both sides with `z` on an explicit sheet: `arg(z/4D) = arg z - arg D`
/// and `arg(1/z) = -arg z` are composed from its argument; both sides are
/// evaluated in coordinates (`x = z/4D`, torus parameter `1/z`).
pub fn bessel_identity_sides_branched(
    k: &KernelSpec,
    d: Complex64,
    z: BranchedPoint,
) -> Result<(Complex64, Complex64)> {
    let l_half = l_factor(&k.rep, HALF)?;
    let zc = z.to_complex();
    let x = BranchedPoint::new(z.modulus / (4.0 * d.norm()), z.argument - d.arg());
    let lhs = relative_i_nx_branched(k, x, l_half)?;
    let sigma = k.partner(d)?;
    let a = BranchedPoint::new(1.0 / z.modulus, -z.argument);
    let jr = j_sl2_torus_branched(&sigma, a)?;
    let eps = epsilon_factor(&k.rep, HALF, &k.chi)?;
    let rhs = 4.0 * transfer_factor(d, &k.chi, zc)? * eps / l_half * d.norm() * jr;
    Ok((lhs, rhs))
}

pub fn bessel_identity_sides(k: &KernelSpec, d: Complex64, z: Complex64) -> Result<(Complex64, Complex64)> {
    bessel_identity_sides_with_l(k, d, z, l_factor(&k.rep, HALF)?)
}

/// `|lhs - rhs| / max(|lhs|, |rhs|)`.
pub fn relative_residual(lhs: Complex64, rhs: Complex64) -> Result<f64> {
    let scale = lhs.norm().max(rhs.norm());
    if scale < 1e-300 {
        return Err(Error::Degenerate);
    }
    Ok((lhs - rhs).norm() / scale)
}

pub fn bessel_identity_residual(k: &KernelSpec, d: Complex64, z: Complex64) -> Result<f64> {
    let (l, r) = bessel_identity_sides(k, d, z)?;
    relative_residual(l, r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::besselc::bessel_big;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn spec(mu: Complex64, m: i32, lam: Complex64) -> KernelSpec {
        KernelSpec::new(RepParam::gl2(mu, m), AdditiveCharacter::new(lam).unwrap())
    }

    #[test]
    fn zero_off_the_cell() {
        let k = spec(c(0.0, 0.2), 0, c(1.0, 0.0));
        let v = bessel_j_g(&k, &GroupElement::t(c(2.0, 1.0))).unwrap();
        assert_eq!(v, KernelValue { value: ZERO, in_cell: false });
        let v = relative_bessel_i(&k, &GroupElement::w0()).unwrap();
        assert!(!v.in_cell && v.value == ZERO);
    }

    #[test]
    fn torus_value_is_bold_j() {
        let k = spec(c(0.0, 0.2), 0, c(1.0, 0.0));
        let v = bessel_j_g(&k, &(GroupElement::t(c(1.0, 0.0)) * GroupElement::w0())).unwrap();
        let b = bessel_big(&k.rep, BranchedPoint::from_complex(c(-1.0, 0.0))).unwrap();
        assert!((v.value - b).norm() < 1e-14 * b.norm());
    }

    #[test]
    fn sl2_value_at_w() {
        for m in [0, 2, 1] {
            let k = spec(c(0.0, 0.3), m, c(0.7, 0.4));
            let v = bessel_j_s(&k, &GroupElement::w()).unwrap().value;
            let lam = k.chi.lambda;
            let z = BranchedPoint::new(lam.norm_sqr(), 2.0 * lam.arg());
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            let b = sign * lam.norm() * bessel_big(&k.rep, z).unwrap();
            assert!((v - b).norm() < 1e-14 * b.norm(), "m={m}");
        }
    }

    #[test]
    fn identity_at_documented_point() {
        let k = spec(c(0.0, 0.3), 0, c(1.0, 0.0));
        let z = Complex64::from_polar(1.7, PI / 5.0);
        let r = bessel_identity_residual(&k, c(1.0, 0.0), z).unwrap();
        assert!(r < 1e-9, "{r}");
        let k = spec(c(0.25, 0.0), 0, c(1.0, 0.0));
        let r = bessel_identity_residual(&k, c(1.0, 0.0), z).unwrap();
        assert!(r < 1e-9, "{r}");
    }
}
