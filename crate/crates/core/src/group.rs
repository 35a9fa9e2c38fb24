//! `GL2(C)` and `SL2(C)` elements, big-cell coordinates, additive characters
//! and the scalar factors attached to a representation.
//!
//! # Measures
//!
//! Quadrature always runs against plain Lebesgue measure on `C = R^2`. The
//! normalized measures are applied where each integral is assembled:
//!
//! | measure       | factor against Lebesgue         |
//! |---------------|---------------------------------|
//! | `dz`          | `2 |lambda|`                    |
//! | `d^x z`       | `2 |lambda| / |z|^2`            |
//! | `dg` on cell  | product of the above per coordinate, times `|a|^{-2}` on `SL2` |
//!
//! [`AdditiveCharacter::measure_factor`] returns the `2 |lambda|` entry.

use crate::besselc::RepParam;
use crate::special::gamma;
use crate::{Complex64, Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::ops::Mul;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// `e(t) = exp(2 pi i t)` with `t` reduced modulo 1 first.
pub fn e(t: f64) -> Complex64 {
    let f = t - t.round();
    Complex64::from_polar(1.0, 2.0 * PI * f)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupElement {
    pub g11: Complex64,
    pub g12: Complex64,
    pub g21: Complex64,
    pub g22: Complex64,
}

impl GroupElement {
    pub fn new(g11: Complex64, g12: Complex64, g21: Complex64, g22: Complex64) -> Result<Self> {
        let g = GroupElement { g11, g12, g21, g22 };
        if g.det() == ZERO {
            return Err(Error::InvalidArgument("singular matrix".into()));
        }
        Ok(g)
    }

    fn raw(g11: Complex64, g12: Complex64, g21: Complex64, g22: Complex64) -> Self {
        GroupElement { g11, g12, g21, g22 }
    }

    /// `n(x) = [[1, x], [0, 1]]`
    pub fn n(x: Complex64) -> Self {
        Self::raw(ONE, x, ZERO, ONE)
    }

    /// `t(a) = diag(a, 1)`
    pub fn t(a: Complex64) -> Self {
        Self::raw(a, ZERO, ZERO, ONE)
    }

    /// `s(a) = diag(a, 1/a)`
    pub fn s(a: Complex64) -> Self {
        Self::raw(a, ZERO, ZERO, 1.0 / a)
    }

    /// `z(c) = diag(c, c)`
    pub fn z(c: Complex64) -> Self {
        Self::raw(c, ZERO, ZERO, c)
    }

    /// `w = [[0, -1], [1, 0]]`
    pub fn w() -> Self {
        Self::raw(ZERO, -ONE, ONE, ZERO)
    }

    /// `w0 = [[0, 1], [1, 0]]`
    pub fn w0() -> Self {
        Self::raw(ZERO, ONE, ONE, ZERO)
    }

    pub fn det(&self) -> Complex64 {
        self.g11 * self.g22 - self.g12 * self.g21
    }

    pub fn is_sl2(&self) -> bool {
        (self.det() - 1.0).norm() < 1e-12
    }

    pub fn in_big_cell(&self) -> bool {
        self.g21 != ZERO
    }

    /// Largest entrywise difference relative to the largest entry.
    pub fn rel_distance(&self, o: &GroupElement) -> f64 {
        let d = [self.g11 - o.g11, self.g12 - o.g12, self.g21 - o.g21, self.g22 - o.g22];
        let s = [self.g11, self.g12, self.g21, self.g22];
        let num = d.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let den = s.iter().map(|v| v.norm()).fold(0.0, f64::max);
        num / den
    }
}

impl Mul for GroupElement {
    type Output = GroupElement;
    fn mul(self, o: GroupElement) -> GroupElement {
        GroupElement::raw(
            self.g11 * o.g11 + self.g12 * o.g21,
            self.g11 * o.g12 + self.g12 * o.g22,
            self.g21 * o.g11 + self.g22 * o.g21,
            self.g21 * o.g12 + self.g22 * o.g22,
        )
    }
}

/// `g = n(x) z(c) t(a) w0 n(y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BruhatCoordsG {
    pub x: Complex64,
    pub c: Complex64,
    pub a: Complex64,
    pub y: Complex64,
}

impl BruhatCoordsG {
    pub fn recompose(&self) -> GroupElement {
        let (x, c, a, y) = (self.x, self.c, self.a, self.y);
        GroupElement::raw(x * c, x * c * y + c * a, c, c * y)
    }
}

/// `g = n(x) s(a) w n(y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BruhatCoordsS {
    pub x: Complex64,
    pub a: Complex64,
    pub y: Complex64,
}

impl BruhatCoordsS {
    pub fn recompose(&self) -> GroupElement {
        let (x, a, y) = (self.x, self.a, self.y);
        GroupElement::raw(x / a, x * y / a - a, 1.0 / a, y / a)
    }
}

pub fn bruhat_decompose_g(g: &GroupElement) -> Result<BruhatCoordsG> {
    if !g.in_big_cell() {
        return Err(Error::NotInBigCell);
    }
    let c = g.g21;
    Ok(BruhatCoordsG { x: g.g11 / c, c, a: -g.det() / (c * c), y: g.g22 / c })
}

pub fn bruhat_decompose_s(g: &GroupElement) -> Result<BruhatCoordsS> {
    if !g.in_big_cell() {
        return Err(Error::NotInBigCell);
    }
    if !g.is_sl2() {
        return Err(Error::InvalidArgument(format!("det = {} is not 1", g.det())));
    }
    let c = g.g21;
    Ok(BruhatCoordsS { x: g.g11 / c, a: 1.0 / c, y: g.g22 / c })
}

/// `psi_lambda(z) = e(Tr(lambda z))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdditiveCharacter {
    pub lambda: Complex64,
}

impl AdditiveCharacter {
    pub fn new(lambda: Complex64) -> Result<Self> {
        if lambda == ZERO {
            return Err(Error::InvalidArgument("lambda must be nonzero".into()));
        }
        Ok(AdditiveCharacter { lambda })
    }

    pub fn psi(&self, z: Complex64) -> Complex64 {
        e(2.0 * (self.lambda * z).re)
    }

    /// Self-dual measure `dz` as a multiple of Lebesgue measure.
    pub fn measure_factor(&self) -> f64 {
        2.0 * self.lambda.norm()
    }

    /// `psi^D(z) = psi(D z)`.
    pub fn twisted(&self, d: Complex64) -> Self {
        AdditiveCharacter { lambda: self.lambda * d }
    }
}

pub fn psi_eval(chi: &AdditiveCharacter, z: Complex64) -> Complex64 {
    chi.psi(z)
}

/// `Gamma_C(s) = 2 (2 pi)^{-s} Gamma(s)`.
pub fn gamma_c(s: Complex64) -> Result<Complex64> {
    Ok(2.0 * (-s * (2.0 * PI).ln()).exp() * gamma(s)?)
}

/// `L(pi_{mu,m}, s) = Gamma_C(s + mu + |m|/4) Gamma_C(s - mu + |m|/4)`.
pub fn l_factor(p: &RepParam, s: Complex64) -> Result<Complex64> {
    if p.m.rem_euclid(2) != 0 {
        return Err(Error::OddM("l_factor", p.m));
    }
    let q = p.m.abs() as f64 / 4.0;
    Ok(gamma_c(s + p.mu + q)? * gamma_c(s - p.mu + q)?)
}

/// `epsilon(pi, s, psi_lambda) = i^{|m|} ||lambda||^{2s - 1}` for even `m`.
pub fn epsilon_factor(p: &RepParam, s: Complex64, chi: &AdditiveCharacter) -> Result<Complex64> {
    if p.m.rem_euclid(2) != 0 {
        return Err(Error::OddM("epsilon_factor", p.m));
    }
    let sign = if (p.m.abs() / 2) % 2 == 0 { 1.0 } else { -1.0 };
    let norm = chi.lambda.norm_sqr();
    Ok(sign * ((2.0 * s - 1.0) * norm.ln()).exp())
}

/// `gamma(z, psi^D) = 1 / sqrt(||2D||) = 1 / (2|D|)`, independent of `z`.
pub fn weil_factor(d: Complex64) -> Result<f64> {
    if d == ZERO {
        return Err(Error::InvalidArgument("D must be nonzero".into()));
    }
    Ok(1.0 / (2.0 * d.norm()))
}

/// `Delta_{D,psi}(z) = gamma(z, psi^D) psi(2D/z) sqrt(||z||)`.
pub fn transfer_factor(d: Complex64, chi: &AdditiveCharacter, z: Complex64) -> Result<Complex64> {
    if z == ZERO {
        return Err(Error::InvalidArgument("transfer factor at z = 0".into()));
    }
    Ok(weil_factor(d)? * chi.psi(2.0 * d / z) * z.norm())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn decompositions_of_named_elements() {
        let b = bruhat_decompose_g(&GroupElement::w0()).unwrap();
        assert_eq!((b.x, b.c, b.a, b.y), (ZERO, ONE, ONE, ZERO));
        let b = bruhat_decompose_g(&(GroupElement::n(c(5.0, 0.0)) * GroupElement::w0())).unwrap();
        assert_eq!((b.x, b.c, b.a, b.y), (c(5.0, 0.0), ONE, ONE, ZERO));
        let g = GroupElement::new(c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0), c(4.0, 0.0)).unwrap();
        let b = bruhat_decompose_g(&g).unwrap();
        assert!((b.x - 1.0 / 3.0).norm() < 1e-15 && (b.c - 3.0).norm() < 1e-15);
        assert!((b.a - 2.0 / 9.0).norm() < 1e-15 && (b.y - 4.0 / 3.0).norm() < 1e-15);
        assert!(b.recompose().rel_distance(&g) < 1e-15);
    }

    #[test]
    fn sl2_decompositions() {
        let b = bruhat_decompose_s(&GroupElement::w()).unwrap();
        assert_eq!((b.x, b.a, b.y), (ZERO, ONE, ZERO));
        let g = GroupElement::s(c(2.0, 0.0)) * GroupElement::w();
        assert_eq!(g.g21, c(0.5, 0.0));
        let b = bruhat_decompose_s(&g).unwrap();
        assert_eq!((b.x, b.a, b.y), (ZERO, c(2.0, 0.0), ZERO));
    }

    #[test]
    fn off_cell_is_an_error() {
        assert!(matches!(bruhat_decompose_g(&GroupElement::t(c(2.0, 1.0))), Err(Error::NotInBigCell)));
    }

    #[test]
    fn character_values() {
        let one = AdditiveCharacter::new(ONE).unwrap();
        assert!((one.psi(c(0.25, 0.0)) + 1.0).norm() < 1e-15);
        assert!((one.psi(c(0.0, 3.7)) - 1.0).norm() < 1e-15);
        // e(2 Re((1+i)(0.3-0.2i))) = e(1.0) = 1
        let chi = AdditiveCharacter::new(c(1.0, 1.0)).unwrap();
        assert!((chi.psi(c(0.3, -0.2)) - 1.0).norm() < 1e-14);
        // e(2 Re((1+i)(0.1+0.05i))) = e(0.1)
        let v = chi.psi(c(0.1, 0.05));
        assert!((v - Complex64::from_polar(1.0, 0.2 * PI)).norm() < 1e-14);
    }

    #[test]
    fn scalar_factors() {
        let p0 = RepParam::gl2(ZERO, 0);
        assert!((l_factor(&p0, c(0.5, 0.0)).unwrap() - 2.0).norm() < 1e-14);
        let chi1 = AdditiveCharacter::new(ONE).unwrap();
        let chi2 = AdditiveCharacter::new(c(2.0, 0.0)).unwrap();
        let p2 = RepParam::gl2(ZERO, 2);
        assert!((epsilon_factor(&p0, c(0.5, 0.0), &chi2).unwrap() - 1.0).norm() < 1e-15);
        assert!((epsilon_factor(&p2, c(0.5, 0.0), &chi2).unwrap() + 1.0).norm() < 1e-15);
        assert!((epsilon_factor(&p2, c(1.0, 0.0), &chi2).unwrap() + 4.0).norm() < 1e-14);
        assert_eq!(weil_factor(c(0.5, 0.0)).unwrap(), 1.0);
        assert_eq!(weil_factor(ONE).unwrap(), 0.5);
        assert!((weil_factor(c(3.0, 4.0)).unwrap() - 0.1).abs() < 1e-16);
        assert!((transfer_factor(ONE, &chi1, c(2.0, 0.0)).unwrap() - 1.0).norm() < 1e-15);
        assert!(matches!(l_factor(&RepParam::gl2(ZERO, 1), c(0.5, 0.0)), Err(Error::OddM(..))));
    }

    #[test]
    fn l_factor_reference() {
        // mpmath: Gamma_C(1 + 0.3i) Gamma_C(1 - 0.3i)
        let p = RepParam::gl2(c(0.0, 0.3), 2);
        let v = l_factor(&p, c(0.5, 0.0)).unwrap();
        assert!((v - c(L_REF, 0.0)).norm() < 1e-14, "{v}");
    }

    const L_REF: f64 = 0.087_742_203_156_773_575;
}
