//! Orbital integrals on `GL2(C)` and `SL2(C)` for compactly supported test
//! functions, and the distributions built from them.
//!
//! Measures: `dx = 2|lambda| dLeb` on `N`, `d*a = 2 dLeb / |a|^2` on `C^x`.
//! Untwisted integrals use `lambda = 1`.
//!
//! Entrywise test functions are products of bumps centered at 0 in the four
//! matrix entries, times a bump in `log |det|`. Their support geometry is
//! explicit, which makes the vanishing predicates below exact, and their
//! invariance under entry phases lets most integrals be reduced to a radial
//! outer variable and an overlap of two disk bumps.

use crate::besselc::RepParam;
use crate::group::{e, AdditiveCharacter, BruhatCoordsS, GroupElement};
use crate::group::l_factor;
use crate::kernels::{an_decompose, j_sl2_torus, j_torus, relative_i_nx_with_l, KernelSpec};
use crate::quad::{gauss_legendre, integrate_plane, InnerEnvelope, PlaneQuadSpec, QuadResult};
use crate::report::SuiteReport;
use crate::sum::pairwise;
use crate::{Complex64, Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

fn cx(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// `exp(1 - 1/(1 - t^2))` on `|t| < 1`, zero elsewhere; equals 1 at 0.
pub fn bump(t: f64) -> f64 {
    let u = 1.0 - t * t;
    if u <= 0.0 {
        0.0
    } else {
        (1.0 - 1.0 / u).exp()
    }
}

/// `amp * bump(|z - center| / radius)` on `C`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiskBump {
    pub center: Complex64,
    pub radius: f64,
    pub amp: f64,
}

impl DiskBump {
    pub fn new(center: Complex64, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidArgument(format!("bump radius must be positive, got {radius}")));
        }
        Ok(DiskBump { center, radius, amp: 1.0 })
    }

    pub fn value(&self, z: Complex64) -> f64 {
        self.amp * bump((z - self.center).norm() / self.radius)
    }

    /// Whether the support stays off a disk around 0, so the bump lies in
    /// `C_c(C^x)`.
    pub fn avoids_zero(&self) -> bool {
        self.center.norm() > self.radius
    }

    /// `int bump dLeb = 2 pi r^2 int_0^1 bump(t) t dt`.
    pub fn lebesgue_mass(&self) -> f64 {
        self.amp * self.radius * self.radius * bump_moment()
    }

    /// `int f(z) psi(z) dz` with `dz = 2|lambda| dLeb`.
    pub fn psi_integral(&self, chi: &AdditiveCharacter) -> Complex64 {
        chi.psi(self.center) * (2.0 * chi.lambda.norm()) * self.amp * self.radius * self.radius * radial_ft(2.0 * chi.lambda.norm() * self.radius)
    }

    /// `int f(z) d*z` with `d*z = 2 dLeb / |z|^2`.
    pub fn multiplicative_mass(&self) -> Result<f64> {
        if !self.avoids_zero() {
            return Err(Error::SupportResolution("multiplicative mass needs a bump away from 0".into()));
        }
        let q = disk_polar(|z| cx(self.value(z) / z.norm_sqr(), 0.0), self.center, self.radius, 3, 48);
        Ok(2.0 * q.re)
    }
}

/// `2 pi int_0^1 bump(t) t dt`.
fn bump_moment() -> f64 {
    static M: OnceLock<f64> = OnceLock::new();
    *M.get_or_init(|| radial_ft(0.0))
}

/// `2 pi int_0^1 bump(t) J_0(2 pi k t) t dt`, the planar Fourier transform
/// of `bump(|u|)` at frequency `|xi| = k`.
pub fn radial_ft(k: f64) -> f64 {
    // The integrand is smooth up to t = 1 with all derivatives vanishing,
    // so composite Gauss converges quickly once J_0 is resolved.
    let panels = 8 + (2.0 * k).ceil() as usize;
    let (x, w) = gl24();
    let h = 1.0 / panels as f64;
    let mut terms = Vec::with_capacity(panels * x.len());
    for p in 0..panels {
        for (xi, wi) in x.iter().zip(w) {
            let t = h * (p as f64 + 0.5 * (xi + 1.0));
            terms.push(bump(t) * bessel_j0(2.0 * PI * k * t) * t * wi * 0.5 * h);
        }
    }
    2.0 * PI * crate::sum::pairwise_real(&terms)
}

fn bessel_j0(x: f64) -> f64 {
    crate::special::bessel_j(ZERO, cx(x, 0.0)).map(|v| v.re).unwrap_or(f64::NAN)
}

fn gl24() -> &'static (Vec<f64>, Vec<f64>) {
    static R: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    R.get_or_init(|| gauss_legendre(24))
}

/// Composite 24-point Gauss rule for `int_a^b f`.
fn gl_composite<F: FnMut(f64) -> Complex64>(mut f: F, a: f64, b: f64, panels: usize) -> Complex64 {
    if !(b > a) {
        return ZERO;
    }
    let (x, w) = gl24();
    let h = (b - a) / panels as f64;
    let mut terms = Vec::with_capacity(panels * x.len());
    for p in 0..panels {
        let lo = a + p as f64 * h;
        for (xi, wi) in x.iter().zip(w) {
            terms.push(f(lo + 0.5 * h * (xi + 1.0)) * (0.5 * h * wi));
        }
    }
    pairwise(&terms)
}

/// `int_{|z - center| < radius} f dLeb` by composite Gauss in the radius and
/// the trapezoid rule in the angle.
fn disk_polar<F: Fn(Complex64) -> Complex64>(f: F, center: Complex64, radius: f64, panels: usize, angles: usize) -> Complex64 {
    let h = 2.0 * PI / angles as f64;
    gl_composite(
        |r| {
            let ring: Vec<Complex64> = (0..angles).map(|k| f(center + Complex64::from_polar(r, (k as f64 + 0.5) * h))).collect();
            pairwise(&ring) * (h * r)
        },
        0.0,
        radius,
        panels,
    )
}

/// `int bump(|y - c1|/r1) bump(|y - c2|/r2) psi(y) dLeb(y)`, with `psi`
/// the character of `lambda` or 1.
pub fn two_disk_overlap(c1: Complex64, r1: f64, c2: Complex64, r2: f64, lambda: Option<Complex64>) -> Complex64 {
    overlap_with(c1, r1, c2, r2, lambda, &OrbitalQuad::default())
}

fn overlap_with(c1: Complex64, r1: f64, c2: Complex64, r2: f64, lambda: Option<Complex64>, q: &OrbitalQuad) -> Complex64 {
    if (c1 - c2).norm() >= r1 + r2 || !(r1 > 0.0 && r2 > 0.0) {
        return ZERO;
    }
    // Polar coordinates about the smaller disk.
    let (cs, rs, cb, rb) = if r2 <= r1 { (c2, r2, c1, r1) } else { (c1, r1, c2, r2) };
    let bw = lambda.map_or(0.0, |l| 4.0 * PI * l.norm() * rs) + 8.0 * rs / rb;
    let angles = (((q.inner_angles as f64 + 2.5 * bw) / 16.0).ceil() as usize) * 16;
    let psi = |y: Complex64| lambda.map_or(cx(1.0, 0.0), |l| e(2.0 * (l * y).re));
    disk_polar(
        |y| psi(y) * (bump((y - cs).norm() / rs) * bump((y - cb).norm() / rb)),
        cs,
        rs,
        q.inner_panels,
        angles,
    )
}

/// A bump in `log |d|` supported on `lo < |d| < hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetAnnulus {
    pub lo: f64,
    pub hi: f64,
}

impl DetAnnulus {
    pub fn value(&self, d: f64) -> f64 {
        if !(d > self.lo && d < self.hi) {
            return 0.0;
        }
        let (l, h) = (self.lo.ln(), self.hi.ln());
        bump((2.0 * d.ln() - l - h) / (h - l))
    }
}

/// Compactly supported test functions on `GL2(C)` (or `SL2(C)` for the
/// entrywise family, where the determinant factor is evaluated at 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TestFnOnG {
    /// `prod bump(|g_ij| / radii_ij) * det_annulus(|det g|)`, radii ordered
    /// `[r11, r12, r21, r22]`.
    Entrywise { radii: [f64; 4], det: DetAnnulus },
    /// `f1(a) f2(c) f3(x) f4(y)` at `t(a) z(c) n(x) w0 n(y)`, zero off `U`.
    /// `f1` and `f2` must avoid 0.
    BruhatSplit { f1: DiskBump, f2: DiskBump, f3: DiskBump, f4: DiskBump },
}

impl TestFnOnG {
    pub fn entrywise(radius: f64, det_lo: f64, det_hi: f64) -> Result<Self> {
        if !(radius > 0.0 && det_lo > 0.0 && det_hi > det_lo) {
            return Err(Error::InvalidArgument("entrywise test function needs radius > 0 and 0 < det_lo < det_hi".into()));
        }
        Ok(TestFnOnG::Entrywise { radii: [radius; 4], det: DetAnnulus { lo: det_lo, hi: det_hi } })
    }

    pub fn split(f1: DiskBump, f2: DiskBump, f3: DiskBump, f4: DiskBump) -> Result<Self> {
        if !f1.avoids_zero() || !f2.avoids_zero() {
            return Err(Error::InvalidArgument("f1 and f2 must be supported away from 0".into()));
        }
        Ok(TestFnOnG::BruhatSplit { f1, f2, f3, f4 })
    }

    pub fn value(&self, g: &GroupElement) -> f64 {
        match self {
            TestFnOnG::Entrywise { radii, det } => {
                let es = [g.g11, g.g12, g.g21, g.g22];
                let mut v = det.value(g.det().norm());
                for (z, r) in es.iter().zip(radii) {
                    if v == 0.0 {
                        break;
                    }
                    v *= bump(z.norm() / r);
                }
                v
            }
            TestFnOnG::BruhatSplit { f1, f2, f3, f4 } => match an_decompose(g) {
                Some(u) => f1.value(u.a) * f2.value(u.c) * f3.value(u.x) * f4.value(u.y),
                None => 0.0,
            },
        }
    }

    /// Value on `SL2(C)`: the determinant factor is dropped.
    pub fn value_sl2(&self, g: &GroupElement) -> Result<f64> {
        match self {
            TestFnOnG::Entrywise { radii, .. } => {
                let es = [g.g11, g.g12, g.g21, g.g22];
                Ok(es.iter().zip(radii).map(|(z, r)| bump(z.norm() / r)).product())
            }
            TestFnOnG::BruhatSplit { .. } => Err(Error::InvalidArgument("split test functions live on GL2".into())),
        }
    }

    /// Largest entry radius `M`.
    pub fn entry_radius(&self) -> Option<f64> {
        match self {
            TestFnOnG::Entrywise { radii, .. } => Some(radii.iter().cloned().fold(0.0, f64::max)),
            _ => None,
        }
    }
}

/// Evaluation budget shared by the orbital integrators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrbitalQuad {
    /// Panels of the outer radial Gauss rule.
    pub outer_panels: usize,
    /// Angular nodes for twisted outer integrals.
    pub outer_angles: usize,
    /// Radial panels of the inner two-disk overlap.
    pub inner_panels: usize,
    /// Base angular nodes of the inner overlap.
    pub inner_angles: usize,
}

impl Default for OrbitalQuad {
    fn default() -> Self {
        OrbitalQuad { outer_panels: 4, outer_angles: 32, inner_panels: 2, inner_angles: 48 }
    }
}

impl OrbitalQuad {
    pub fn doubled(&self) -> Self {
        OrbitalQuad {
            outer_panels: 2 * self.outer_panels,
            outer_angles: 2 * self.outer_angles,
            inner_panels: 2 * self.inner_panels,
            inner_angles: 2 * self.inner_angles,
        }
    }

    /// The companion rule used for error estimates.
    fn halved(&self) -> Self {
        OrbitalQuad {
            outer_panels: (self.outer_panels / 2).max(1),
            outer_angles: (self.outer_angles / 2).max(8),
            inner_panels: (self.inner_panels / 2).max(1),
            inner_angles: (self.inner_angles / 2).max(16),
        }
    }
}

/// Value of an orbital integral with a structural-zero flag. When
/// `structural_zero` is set the value is exactly 0 and no quadrature ran.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OrbitalValue {
    #[serde(with = "crate::report::complex_obj")]
    pub value: Complex64,
    pub err_estimate: f64,
    pub structural_zero: bool,
}

impl OrbitalValue {
    fn zero() -> Self {
        OrbitalValue { value: ZERO, err_estimate: 0.0, structural_zero: true }
    }

    fn from_pair(fine: Complex64, coarse: Complex64) -> Self {
        OrbitalValue { value: fine, err_estimate: (fine - coarse).norm(), structural_zero: false }
    }
}

/// Exact vanishing predicate for `J(a, c, f)`: with entries bounded by `M`
/// and `|det| >= delta`, the `(2,1)` entry `c/a` leaves the support once
/// `|a| < delta^{1/2} / M`.
pub fn nn_structurally_zero(a: Complex64, f: &TestFnOnG) -> bool {
    match f {
        TestFnOnG::Entrywise { det, .. } => {
            let m = f.entry_radius().unwrap_or(0.0);
            a.norm() < det.lo.sqrt() / m
        }
        TestFnOnG::BruhatSplit { f1, .. } => {
            // f1(a^2) needs |a|^2 inside the annulus around the f1 center.
            let (lo, hi) = (f1.center.norm() - f1.radius, f1.center.norm() + f1.radius);
            let r = a.norm_sqr();
            r <= lo || r >= hi
        }
    }
}

/// Exact vanishing predicate for `M(x, c, f)`: the product of the first
/// column entries is `c^2 x`, so `|x| > M^2 / delta` leaves the support.
pub fn an_structurally_zero(x: Complex64, f: &TestFnOnG) -> bool {
    match f {
        TestFnOnG::Entrywise { det, .. } => {
            let m = f.entry_radius().unwrap_or(0.0);
            x.norm() > m * m / det.lo
        }
        TestFnOnG::BruhatSplit { f3, .. } => f3.value(x) == 0.0,
    }
}

fn det_factor(f: &TestFnOnG, c: Complex64) -> f64 {
    match f {
        TestFnOnG::Entrywise { det, .. } => det.value(c.norm_sqr()),
        _ => 1.0,
    }
}

/// `J(a, c, f) = int int f(n(x) z(c) s(a) w0 n(y)) dx dy`.
///
/// For entrywise `f` the matrix is `[[cx/a, c(xy + a^2)/a], [c/a, cy/a]]`;
/// the `y`-integral is an overlap of two disk bumps depending on `|x|`
/// only, so the outer integral is radial.
pub fn orbital_nn_app(a: Complex64, c: Complex64, f: &TestFnOnG) -> Result<OrbitalValue> {
    orbital_nn_app_with(a, c, f, &OrbitalQuad::default())
}

pub fn orbital_nn_app_with(a: Complex64, c: Complex64, f: &TestFnOnG, q: &OrbitalQuad) -> Result<OrbitalValue> {
    if a == ZERO || c == ZERO {
        return Err(Error::InvalidArgument("J(a, c, f) needs a, c in C^x".into()));
    }
    if nn_structurally_zero(a, f) {
        return Ok(OrbitalValue::zero());
    }
    match f {
        TestFnOnG::Entrywise { radii: [m11, m12, m21, m22], .. } => {
            let (ra, rc) = (a.norm(), c.norm());
            let pre = det_factor(f, c) * bump(rc / (ra * m21));
            if pre == 0.0 {
                return Ok(OrbitalValue::zero());
            }
            let rho = m11 * ra / rc;
            let r_lo = ((ra * rc - m12) / m22).max(0.0);
            if r_lo >= rho {
                return Ok(OrbitalValue::zero());
            }
            let r1 = m22 * ra / rc;
            let run = |q: &OrbitalQuad| {
                let radial = |r: f64| {
                    let inner = overlap_with(ZERO, r1, cx(-ra * ra / r, 0.0), m12 * ra / (rc * r), None, q);
                    inner * (2.0 * PI * r * bump(rc * r / (ra * m11)))
                };
                gl_composite(radial, r_lo, rho, q.outer_panels) * (4.0 * pre)
            };
            Ok(OrbitalValue::from_pair(run(q), run(&q.halved())))
        }
        TestFnOnG::BruhatSplit { f1, f2, f3, f4 } => {
            let v = f1.value(a * a) * f2.value(c / a) * a.norm_sqr().powi(2) * 4.0 * f3.lebesgue_mass() * f4.lebesgue_mass();
            Ok(OrbitalValue { value: cx(v, 0.0), err_estimate: 0.0, structural_zero: false })
        }
    }
}

/// `J(a, c, f)` by a plain 4D tensor Gauss rule (24 nodes per real axis)
/// over the support box of `(x, y)`; a check on [`orbital_nn_app`] for
/// moderate `a`.
pub fn orbital_nn_app_tensor(a: Complex64, c: Complex64, f: &TestFnOnG) -> Result<Complex64> {
    let Some(m) = f.entry_radius() else {
        return Err(Error::InvalidArgument("tensor route needs an entrywise test function".into()));
    };
    if a == ZERO || c == ZERO {
        return Err(Error::InvalidArgument("J(a, c, f) needs a, c in C^x".into()));
    }
    let rho = m * a.norm() / c.norm();
    let (x, w) = gl24();
    let nodes: Vec<(f64, f64)> = x.iter().zip(w).map(|(xi, wi)| (rho * xi, rho * wi)).collect();
    let base = GroupElement::z(c) * GroupElement::s(a) * GroupElement::w0();
    let mut total = Vec::with_capacity(nodes.len().pow(2));
    for &(x1, w1) in &nodes {
        for &(x2, w2) in &nodes {
            let left = GroupElement::n(cx(x1, x2)) * base;
            let mut acc = 0.0;
            for &(y1, v1) in &nodes {
                for &(y2, v2) in &nodes {
                    acc += v1 * v2 * f.value(&(left * GroupElement::n(cx(y1, y2))));
                }
            }
            total.push(acc * w1 * w2);
        }
    }
    Ok(cx(4.0 * crate::sum::pairwise_real(&total), 0.0))
}

/// `M(x, c, f) = int int f(s(a) z(c) n(x) w0 n(y)) d*a dy`.
///
/// For entrywise `f` the matrix is `[[cax, ca(xy + 1)], [c/a, cy/a]]`; the
/// `y`-integral depends on `|a|` only and the outer integral runs over
/// `log |a|`.
pub fn orbital_an_app(x: Complex64, c: Complex64, f: &TestFnOnG) -> Result<OrbitalValue> {
    orbital_an_app_with(x, c, f, &OrbitalQuad::default())
}

pub fn orbital_an_app_with(x: Complex64, c: Complex64, f: &TestFnOnG, q: &OrbitalQuad) -> Result<OrbitalValue> {
    if x == ZERO || c == ZERO {
        return Err(Error::InvalidArgument("M(x, c, f) needs x, c in C^x".into()));
    }
    if an_structurally_zero(x, f) {
        return Ok(OrbitalValue::zero());
    }
    match f {
        TestFnOnG::Entrywise { radii: [m11, m12, m21, m22], .. } => {
            let (rx, rc) = (x.norm(), c.norm());
            let pre = det_factor(f, c);
            let (s_lo, s_hi) = (rc / m21, m11 / (rc * rx));
            if pre == 0.0 || s_lo >= s_hi {
                return Ok(OrbitalValue::zero());
            }
            let c2 = -1.0 / x;
            let run = |q: &OrbitalQuad| {
                let by_log = |t: f64| {
                    let s = t.exp();
                    let inner = overlap_with(ZERO, m22 * s / rc, c2, m12 / (rc * s * rx), None, q);
                    inner * (2.0 * PI * bump(rc * s * rx / m11) * bump(rc / (s * m21)))
                };
                gl_composite(by_log, s_lo.ln(), s_hi.ln(), q.outer_panels) * (4.0 * pre)
            };
            Ok(OrbitalValue::from_pair(run(q), run(&q.halved())))
        }
        TestFnOnG::BruhatSplit { f1, f2, f3, f4 } => {
            // Substituting u = c/a leaves d*a invariant.
            let run = |p: usize, n: usize| {
                disk_polar(|u| cx(f1.value(c * c / (u * u)) * f2.value(u) / u.norm_sqr(), 0.0), f2.center, f2.radius, p, n) * 2.0
            };
            let pre = f3.value(x) * 2.0 * f4.lebesgue_mass();
            let h = q.halved();
            let fine = run(2 * q.outer_panels, 2 * q.outer_angles) * pre;
            let coarse = run(2 * h.outer_panels, 2 * h.outer_angles) * pre;
            Ok(OrbitalValue::from_pair(fine, coarse))
        }
    }
}

/// `O^{NN}_{h,psi}(g) = int int h(n(x) g n(y)) psi(x) psi(y) dx dy` on
/// `SL2(C)` for an entrywise `h`, with `g = n(x0) s(a) w n(y0)`.
///
/// Shifting the variables gives `psi(-x0) psi(-y0) O(s(a) w)`; there the
/// matrix is `[[x/a, (xy - a^2)/a], [1/a, y/a]]`.
pub fn orbital_nn_psi(h: &TestFnOnG, g: &BruhatCoordsS, chi: &AdditiveCharacter) -> Result<OrbitalValue> {
    orbital_nn_psi_with(h, g, chi, &OrbitalQuad::default())
}

pub fn orbital_nn_psi_with(h: &TestFnOnG, g: &BruhatCoordsS, chi: &AdditiveCharacter, q: &OrbitalQuad) -> Result<OrbitalValue> {
    let TestFnOnG::Entrywise { radii: [m11, m12, m21, m22], .. } = *h else {
        return Err(Error::InvalidArgument("O^NN on SL2 needs an entrywise test function".into()));
    };
    let a = g.a;
    if a == ZERO {
        return Err(Error::InvalidArgument("s(a) needs a in C^x".into()));
    }
    let ra = a.norm();
    let pre = bump(1.0 / (ra * m21));
    let rho = m11 * ra;
    let r_lo = ((ra - m12) / m22).max(0.0);
    if pre == 0.0 || r_lo >= rho {
        return Ok(OrbitalValue::zero());
    }
    let lam = chi.lambda;
    let a2 = a * a;
    let run = |q: &OrbitalQuad| {
        let radial = |r: f64| {
            let bw = 4.0 * PI * lam.norm() * (r + m22 * ra);
            let n = (((q.outer_angles as f64 + 2.5 * bw) / 16.0).ceil() as usize) * 16;
            let step = 2.0 * PI / n as f64;
            let ring: Vec<Complex64> = (0..n)
                .map(|k| {
                    let x = Complex64::from_polar(r, (k as f64 + 0.5) * step);
                    chi.psi(x) * overlap_with(ZERO, m22 * ra, a2 / x, m12 * ra / r, Some(lam), q)
                })
                .collect();
            pairwise(&ring) * (step * r * bump(r / rho))
        };
        gl_composite(radial, r_lo, rho, q.outer_panels)
    };
    let scale = chi.psi(-g.x) * chi.psi(-g.y) * (pre * chi.measure_factor().powi(2));
    Ok(OrbitalValue::from_pair(run(q) * scale, run(&q.halved()) * scale))
}

/// `O^{AN}_{f,psi}(g) = int_A int_N f(a g n) psi(n) d*a dn` over the full
/// diagonal torus, for `g` in `U`.
///
/// Split `f` separates: with `g = t(al) z(ga) n(xi) w0 n(eta)` the value is
/// `int f1 d* int f2 d* f3(xi) psi(-eta) int f4 psi`. Entrywise `f` is
/// invariant under entry phases, so the torus integral runs over the two
/// moduli only.
pub fn orbital_an_psi(f: &TestFnOnG, g: &GroupElement, chi: &AdditiveCharacter) -> Result<OrbitalValue> {
    orbital_an_psi_with(f, g, chi, &OrbitalQuad::default())
}

pub fn orbital_an_psi_with(f: &TestFnOnG, g: &GroupElement, chi: &AdditiveCharacter, q: &OrbitalQuad) -> Result<OrbitalValue> {
    let Some(u) = an_decompose(g) else {
        return Err(Error::NotInBigCell);
    };
    if u.x == ZERO {
        return Err(Error::InvalidArgument("O^AN is evaluated on U, which needs x != 0".into()));
    }
    match f {
        TestFnOnG::BruhatSplit { f1, f2, f3, f4 } => {
            let v3 = f3.value(u.x);
            if v3 == 0.0 {
                return Ok(OrbitalValue::zero());
            }
            let (m1, m2) = (f1.multiplicative_mass()?, f2.multiplicative_mass()?);
            let v = chi.psi(-u.y) * f4.psi_integral(chi) * (m1 * m2 * v3);
            Ok(OrbitalValue { value: v, err_estimate: 1e-12 * v.norm(), structural_zero: false })
        }
        TestFnOnG::Entrywise { radii: [m11, m12, m21, m22], det } => {
            let (n11, n21, nd) = (g.g11.norm(), g.g21.norm(), g.det().norm());
            let (c12, c22) = (-g.g12 / g.g11, -g.g22 / g.g21);
            let t1_hi = (m11 / n11).ln();
            let t2_hi = (m21 / n21).ln();
            let t_sum_lo = (det.lo / nd).ln();
            let t_sum_hi = (det.hi / nd).ln();
            let t1_lo = t_sum_lo - t2_hi;
            if t1_lo >= t1_hi {
                return Ok(OrbitalValue::zero());
            }
            let lam = chi.lambda;
            let run = |q: &OrbitalQuad| {
                let p = (q.outer_panels / 2).max(2);
                gl_composite(
                    |t1| {
                        let r1 = t1.exp();
                        let lo = t_sum_lo - t1;
                        let hi = t2_hi.min(t_sum_hi - t1);
                        let w1 = bump(r1 * n11 / m11);
                        if w1 == 0.0 {
                            return ZERO;
                        }
                        gl_composite(
                            |t2| {
                                let r2 = t2.exp();
                                let w = w1 * bump(r2 * n21 / m21) * det.value(r1 * r2 * nd);
                                if w == 0.0 {
                                    return ZERO;
                                }
                                overlap_with(c12, m12 / (r1 * n11), c22, m22 / (r2 * n21), Some(lam), q) * w
                            },
                            lo,
                            hi,
                            p,
                        )
                    },
                    t1_lo,
                    t1_hi,
                    p,
                )
            };
            // (2 * 2 pi)^2 from the two d* measures, times the dn factor.
            let scale = (4.0 * PI).powi(2) * chi.measure_factor();
            Ok(OrbitalValue::from_pair(run(q) * scale, run(&q.halved()) * scale))
        }
    }
}

fn lenient(r: Result<Complex64>) -> Complex64 {
    match r {
        Ok(v) => v,
        Err(Error::AccuracyLoss { estimate, rel_err }) if rel_err < 1e-5 => estimate,
        Err(_) => cx(f64::NAN, f64::NAN),
    }
}

fn require_even_generic(p: &RepParam) -> Result<()> {
    if p.m.rem_euclid(2) != 0 {
        return Err(Error::OddM("relative Bessel distribution", p.m));
    }
    if !p.is_unitary() || !(p.mu.re.abs() < 0.5) {
        return Err(Error::InvalidArgument("expected unitary parameters with |Re mu| < 1/2".into()));
    }
    Ok(())
}

/// `int f3(x) i(n(x) w0) dx` over the support disk of `f3`, which must avoid
/// 0. Returns the value at the given resolution and the companion at half
/// resolution.
fn f3_against_i(k: &KernelSpec, f3: &DiskBump, l_half: Complex64, level: u32) -> Result<(Complex64, Complex64)> {
    if !f3.avoids_zero() {
        return Err(Error::SupportResolution("the direct route needs f3 supported away from 0".into()));
    }
    let lam = k.chi.lambda;
    let gap = f3.center.norm() - f3.radius;
    // Phase speed of e(Tr(lambda/2x)) and of the Bessel factor across the disk.
    let speed = 4.0 * PI * lam.norm() / (gap * gap);
    let base_panels = 4 + (speed * f3.radius / 8.0).ceil() as usize;
    let base_angles = (((64.0 + 2.5 * speed * f3.radius) / 16.0).ceil() as usize) * 16;
    let run = |p: usize, n: usize| {
        disk_polar(
            |x| lenient(relative_i_nx_with_l(k, x, l_half)) * f3.value(x),
            f3.center,
            f3.radius,
            p,
            n,
        ) * k.chi.measure_factor()
    };
    let s = 1usize << level;
    let fine = run(2 * s * base_panels, 2 * s * base_angles);
    let coarse = run(s * base_panels, s * base_angles);
    if !(fine.re.is_finite() && fine.im.is_finite() && coarse.re.is_finite()) {
        return Err(Error::NotANumber("relative Bessel function on the support of f3"));
    }
    Ok((fine, coarse))
}

/// `I_pi(f) = int O^{AN}_{f,psi}(n(x) w0) i_{pi,psi}(n(x) w0) dx` for a split
/// test function whose `f3` avoids 0.
pub fn distribution_i_pi(p: &RepParam, chi: &AdditiveCharacter, f: &TestFnOnG) -> Result<OrbitalValue> {
    require_even_generic(p)?;
    let TestFnOnG::BruhatSplit { f1, f2, f3, f4 } = f else {
        return Err(Error::InvalidArgument("the relative distribution is implemented for split test functions".into()));
    };
    let k = KernelSpec::new(*p, *chi);
    let l_half = l_factor(p, cx(0.5, 0.0))?;
    let pre = f4.psi_integral(chi) * (f1.multiplicative_mass()? * f2.multiplicative_mass()?);
    let (fine, coarse) = f3_against_i(&k, f3, l_half, 0)?;
    Ok(OrbitalValue::from_pair(fine * pre, coarse * pre))
}

/// Ring-keyed cache for radial factors evaluated on every node of a ring.
struct RadialMemo<F: Fn(f64) -> f64> {
    f: F,
    cache: Mutex<HashMap<i64, f64>>,
}

impl<F: Fn(f64) -> f64> RadialMemo<F> {
    fn new(f: F) -> Self {
        RadialMemo { f, cache: Mutex::new(HashMap::new()) }
    }

    fn get(&self, r: f64) -> f64 {
        let key = (r.ln() * 1e9).round() as i64;
        if let Some(v) = self.cache.lock().unwrap().get(&key) {
            return *v;
        }
        let v = (self.f)(r);
        self.cache.lock().unwrap().insert(key, v);
        v
    }
}

/// The factorized form `(1/L) int f1 d* int f2 d* int f4 psi int j(t(a) w0) f3^(a) d*a`.
pub fn factorized_i_pi(p: &RepParam, chi: &AdditiveCharacter, f: &TestFnOnG) -> Result<QuadResult> {
    factorized_i_pi_with(p, chi, f, 1e-8)
}

/// As [`factorized_i_pi`] with `tol` controlling the radial cut and the
/// panel tolerance of the plane quadrature.
pub fn factorized_i_pi_with(p: &RepParam, chi: &AdditiveCharacter, f: &TestFnOnG, tol: f64) -> Result<QuadResult> {
    require_even_generic(p)?;
    let TestFnOnG::BruhatSplit { f1, f2, f3, f4 } = f else {
        return Err(Error::InvalidArgument("the factorized form needs a split test function".into()));
    };
    let k = KernelSpec::new(*p, *chi);
    let lam = chi.lambda;
    let l = lam.norm();
    let l_half = l_factor(p, cx(0.5, 0.0))?;
    let pre = f4.psi_integral(chi) * (f1.multiplicative_mass()? * f2.multiplicative_mass()?) / l_half;

    // f3^(a) = psi(a c3) 2|lambda| amp r^2 radial_ft(2 |lambda a| r).
    let r3 = f3.radius;
    let scale = 2.0 * l * f3.amp * r3 * r3;
    let radial = RadialMemo::new(|ra: f64| radial_ft(2.0 * l * ra * r3));
    let peak = radial_ft(0.0);
    // Cut once the transform envelope, weighted by the sqrt growth of j,
    // stays below `tol` of its peak over a factor 4 in radius.
    let envelope_at = |r: f64| (0..=32).map(|i| radial_ft(2.0 * l * r * r3 * 4f64.powf(i as f64 / 32.0)).abs()).fold(0.0, f64::max);
    let mut r_cut = 1.0 / (l * r3);
    while envelope_at(r_cut) * (r_cut * l).sqrt() > tol * peak {
        r_cut *= 1.5;
        if r_cut > 1e4 {
            return Err(Error::NonConvergence("transform of f3 decays too slowly".into()));
        }
    }
    let tail = 4.0 * PI * envelope_at(r_cut) * scale * (l * r_cut).sqrt() * l.powi(2);

    let dens = |a: Complex64| {
        let ra = a.norm();
        lenient(j_torus(&k, a)) * chi.psi(a * f3.center) * (scale * radial.get(ra) * 2.0 * l / (ra * ra))
    };
    let delta = 1e-14;
    let alpha = -1.0 - 2.0 * p.mu.re.abs() - 0.02;
    let c_env = (0..=8)
        .flat_map(|i| (0..16).map(move |j| (i, j)))
        .map(|(i, j)| {
            let r = delta * 10f64.powf(i as f64 / 4.0);
            dens(Complex64::from_polar(r, 2.0 * PI * (j as f64 + 0.31) / 16.0)).norm() * r.powf(-alpha)
        })
        .filter(|v| v.is_finite())
        .fold(1e-300, f64::max);
    let env = InnerEnvelope { c: 2.0 * c_env, alpha };
    let bw = |r: f64| 8.0 * PI * l * r.sqrt() + 4.0 * PI * l * f3.center.norm() * r + 16.0;
    let spec = PlaneQuadSpec { r_envelope: 100.0 * delta, panel_tol: tol, ..PlaneQuadSpec::new(delta, r_cut) };
    let q = integrate_plane(dens, bw, env, &spec, tail)?;
    Ok(QuadResult { value: q.value * pre, err_estimate: q.err_estimate * pre.norm(), evaluations: q.evaluations })
}

/// Integration budget for [`distribution_j_sigma`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JSigmaOptions {
    /// Outer cut in `|a|`; the tail past it is not bounded.
    pub a_max: f64,
    pub radial_panels: usize,
    pub angles: usize,
    pub quad: OrbitalQuad,
}

impl Default for JSigmaOptions {
    fn default() -> Self {
        JSigmaOptions {
            a_max: 8.0,
            radial_panels: 2,
            angles: 16,
            quad: OrbitalQuad { outer_panels: 2, outer_angles: 16, inner_panels: 1, inner_angles: 24 },
        }
    }
}

/// `J_sigma(h) = int O^{NN}_{h,psi}(s(a) w) j_sigma(s(a) w) ||a||^{-2} d*a`
/// for an entrywise `h` on `SL2(C)`, truncated at `|a| = a_max`.
pub fn distribution_j_sigma(sigma: &RepParam, chi: &AdditiveCharacter, h: &TestFnOnG, opts: &JSigmaOptions) -> Result<OrbitalValue> {
    let TestFnOnG::Entrywise { radii, .. } = h else {
        return Err(Error::InvalidArgument("J_sigma is implemented for entrywise test functions".into()));
    };
    let k = KernelSpec::new(*sigma, *chi);
    let (t_lo, t_hi) = ((1.0 / radii[2]).ln(), opts.a_max.ln());
    if t_lo >= t_hi {
        return Ok(OrbitalValue::zero());
    }
    let step = 2.0 * PI / opts.angles as f64;
    let mut err = 0.0;
    let mut failure = None;
    let value = gl_composite(
        |t| {
            let ra = t.exp();
            let ring: Vec<Complex64> = (0..opts.angles)
                .map(|i| {
                    let a = Complex64::from_polar(ra, (i as f64 + 0.5) * step);
                    let g = BruhatCoordsS { x: ZERO, a, y: ZERO };
                    match (orbital_nn_psi_with(h, &g, chi, &opts.quad), j_sl2_torus(&k, a)) {
                        (Ok(o), Ok(j)) => {
                            err += o.err_estimate * j.norm() * 2.0 * ra.powi(-4) * step;
                            o.value * j * (2.0 * ra.powi(-4))
                        }
                        (Err(e), _) | (_, Err(e)) => {
                            failure.get_or_insert(e);
                            ZERO
                        }
                    }
                })
                .collect();
            pairwise(&ring) * step
        },
        t_lo,
        t_hi,
        opts.radial_panels,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(OrbitalValue { value, err_estimate: err, structural_zero: false })
}

/// Tolerance for the two routes to `I_pi(f)` on split test functions.
pub const TOL_FACTORIZATION: f64 = 1e-4;

/// Compares the direct route `int O^{AN} i dx` with the factorized route
/// through the transform of `f3`.
pub fn verify_factorization(p: &RepParam, chi: &AdditiveCharacter, f: &TestFnOnG) -> SuiteReport {
    let params = crate::report::params([
        ("mu", crate::report::fmt_complex(p.mu)),
        ("m", p.m.to_string()),
        ("lambda", crate::report::fmt_complex(chi.lambda)),
        ("test_fn", serde_json::to_string(f).unwrap_or_default()),
    ]);
    let (direct, factored) = match (distribution_i_pi(p, chi, f), factorized_i_pi(p, chi, f)) {
        (Ok(d), Ok(q)) => (d, q),
        (Err(e), _) | (_, Err(e)) => return SuiteReport::failed("orbital_factorization", params, TOL_FACTORIZATION, e.to_string()),
    };
    let mut rep = SuiteReport::new("orbital_factorization", params, direct.value, factored.value, TOL_FACTORIZATION);
    rep.evals = factored.evaluations;
    rep.diagnostics.lhs_err = direct.err_estimate;
    rep.diagnostics.rhs_err = factored.err_estimate;
    rep
}

/// Slope bounds for the growth checks.
pub const NN_SLOPE_MAX: f64 = 2.2;
pub const AN_SLOPE_MIN: f64 = -0.2;

/// Parameters cycled through by the factorization checks.
pub fn factorization_params(i: usize) -> (RepParam, AdditiveCharacter) {
    let table = [
        (cx(0.0, 0.2), 0, cx(1.0, 0.0)),
        (cx(0.25, 0.0), 0, cx(0.6, 0.5)),
        (cx(0.0, 0.4), 2, cx(1.0, 0.0)),
        (cx(0.1, 0.0), 0, cx(-0.8, 0.7)),
        (cx(0.0, -0.3), 0, cx(0.9, -0.4)),
    ];
    let (mu, m, lam) = table[i % table.len()];
    (RepParam::gl2(mu, m), AdditiveCharacter { lambda: lam })
}

/// Largest `|f|` over pseudo-random points of the orbit `g(u)` with `u`
/// drawn from wide log-uniform ranges.
fn sampled_sup<G: Fn(Complex64, Complex64) -> GroupElement>(f: &TestFnOnG, g: G, seed: u64) -> f64 {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let draw = |rng: &mut rand_chacha::ChaCha8Rng| Complex64::from_polar(10f64.powf(rng.gen_range(-4.0..4.0)), rng.gen_range(-PI..PI));
    (0..20000).map(|_| {
        let (u, v) = (draw(&mut rng), draw(&mut rng));
        f.value(&g(u, v))
    }).fold(0.0, f64::max)
}

/// Structural zeros, growth slopes and the two-route factorization on
/// `samples` seeded split test functions.
pub fn orbital_props(samples: usize, seed: u64) -> Result<Vec<SuiteReport>> {
    use crate::report::{fmt_complex, params};
    let f = TestFnOnG::entrywise(1.0, 0.05, 2.0)?;
    let fj = serde_json::to_string(&f).unwrap_or_default();
    let TestFnOnG::Entrywise { det, .. } = f else { unreachable!() };
    let m = f.entry_radius().unwrap_or(1.0);
    let mut out = Vec::new();

    // Below |a| = delta^{1/2}/M the integrand vanishes on the whole (x, y) plane.
    let a0 = Complex64::from_polar(0.9 * det.lo.sqrt() / m, 0.4);
    let c0 = cx(0.6, 0.2);
    let base = GroupElement::z(c0) * GroupElement::s(a0) * GroupElement::w0();
    let sup = sampled_sup(&f, |x, y| GroupElement::n(x) * base * GroupElement::n(y), seed);
    let tensor = orbital_nn_app_tensor(a0, c0, &f)?.norm();
    let flagged = orbital_nn_app(a0, c0, &f)?.structural_zero && nn_structurally_zero(a0, &f);
    let pr = params([("a", fmt_complex(a0)), ("c", fmt_complex(c0)), ("test_fn", fj.clone())]);
    let mut r = SuiteReport::new("orbital_nn_zero", pr, cx(sup.max(tensor), 0.0), ZERO, 1e-12);
    if !flagged {
        r.flags.push("error".into());
        r.diagnostics.notes.push("predicate did not fire".into());
    }
    out.push(r);

    let x0 = Complex64::from_polar(1.1 * m * m / det.lo, -1.0);
    let sup = sampled_sup(
        &f,
        |a, y| GroupElement::s(a) * GroupElement::z(c0) * GroupElement::n(x0) * GroupElement::w0() * GroupElement::n(y),
        seed ^ 1,
    );
    let flagged = orbital_an_app(x0, c0, &f)?.structural_zero && an_structurally_zero(x0, &f);
    let pr = params([("x", fmt_complex(x0)), ("c", fmt_complex(c0)), ("test_fn", fj.clone())]);
    let mut r = SuiteReport::new("orbital_an_zero", pr, cx(sup, 0.0), ZERO, 1e-12);
    if !flagged {
        r.flags.push("error".into());
        r.diagnostics.notes.push("predicate did not fire".into());
    }
    out.push(r);

    let cs = [0.3, 0.5, 0.8, 1.1, 1.3];
    let a_grid = [10.0, 20.0, 40.0, 80.0, 160.0];
    let slope = nn_growth_slope(&f, &a_grid, &cs)?;
    let pr = params([("a_moduli", format!("{a_grid:?}")), ("c_moduli", format!("{cs:?}")), ("test_fn", fj.clone())]);
    out.push(SuiteReport::bound_check("orbital_nn_slope", pr, slope, NN_SLOPE_MAX, true));
    let x_grid = [1e-2, 1e-3, 1e-4, 1e-5, 1e-6];
    let slope = an_growth_slope(&f, &x_grid, &cs)?;
    let pr = params([("x_moduli", format!("{x_grid:?}")), ("c_moduli", format!("{cs:?}")), ("test_fn", fj)]);
    out.push(SuiteReport::bound_check("orbital_an_slope", pr, slope, AN_SLOPE_MIN, false));

    for (i, g) in draw_split_test_functions(samples, seed).iter().enumerate() {
        let (p, chi) = factorization_params(i);
        out.push(verify_factorization(&p, &chi, g));
    }
    Ok(out)
}

/// Outcome of the conditional distribution identity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransferCheck {
    /// Worst relative mismatch of the orbital-integral matching over the
    /// sample points.
    pub matching_residual: f64,
    pub matched: bool,
    /// `I_pi(f)` and `J_{sigma,psi^D}(f') epsilon / (||2D|| L)`, present only
    /// when the matching holds.
    #[serde(with = "crate::report::complex_opt")]
    pub lhs: Option<Complex64>,
    #[serde(with = "crate::report::complex_opt")]
    pub rhs: Option<Complex64>,
}

/// Matching tolerance for user-supplied pairs `(f, f')`.
pub const TOL_MATCHING: f64 = 1e-3;

/// Checks `O^{AN}_{f,psi}(n(z/4D) w0) = O^{NN}_{f',psi^D}(w s(z)) psi(-2D/z)
/// sqrt(||z||) / gamma` at `zs`, and when it holds compares the two
/// distributions. Nothing is concluded for pairs that do not match.
pub fn transfer_identity_check(
    p: &RepParam,
    chi: &AdditiveCharacter,
    d: Complex64,
    f: &TestFnOnG,
    f_prime: &TestFnOnG,
    zs: &[Complex64],
    opts: &JSigmaOptions,
) -> Result<TransferCheck> {
    require_even_generic(p)?;
    if d == ZERO || zs.contains(&ZERO) {
        return Err(Error::InvalidArgument("D and the sample points must be nonzero".into()));
    }
    let chi_d = chi.twisted(d);
    let gamma = 1.0 / (2.0 * d.norm());
    // O^NN with psi^D as twist but the Haar measure of psi.
    let measure_fix = 1.0 / d.norm_sqr();
    let mut worst = 0.0f64;
    for z in zs {
        let g = GroupElement::n(*z / (4.0 * d)) * GroupElement::w0();
        let lhs = orbital_an_psi(f, &g, chi)?.value;
        let s = BruhatCoordsS { x: ZERO, a: 1.0 / *z, y: ZERO };
        let o = orbital_nn_psi(f_prime, &s, &chi_d)?.value * measure_fix;
        let rhs = o * chi.psi(-2.0 * d / *z) * (z.norm() / gamma);
        let scale = lhs.norm().max(rhs.norm()).max(crate::report::REL_FLOOR);
        worst = worst.max((lhs - rhs).norm() / scale);
    }
    let matched = worst <= TOL_MATCHING;
    if !matched {
        return Ok(TransferCheck { matching_residual: worst, matched, lhs: None, rhs: None });
    }
    let sigma = RepParam::sl2(p.mu / 2.0, p.m / 2);
    let eps = crate::group::epsilon_factor(p, cx(0.5, 0.0), chi)?;
    let l_half = l_factor(p, cx(0.5, 0.0))?;
    let lhs = distribution_i_pi(p, chi, f)?.value;
    // j_{sigma,psi^D} carries the extra factor sqrt(||D||) = |D|.
    let j = distribution_j_sigma(&sigma, &chi_d, f_prime, opts)?.value * (measure_fix * d.norm());
    let rhs = j * eps / (4.0 * d.norm_sqr() * l_half);
    Ok(TransferCheck { matching_residual: worst, matched, lhs: Some(lhs), rhs: Some(rhs) })
}

/// Random split test functions with `f3` kept off a disk around 0.
pub fn draw_split_test_functions(n: usize, seed: u64) -> Vec<TestFnOnG> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let disk = |rng: &mut rand_chacha::ChaCha8Rng, r_lo: f64, r_hi: f64, frac_lo: f64, frac_hi: f64| {
        let r = rng.gen_range(r_lo..r_hi);
        let center = Complex64::from_polar(r, rng.gen_range(0.0..2.0 * PI));
        let radius = r.max(0.5) * rng.gen_range(frac_lo..frac_hi);
        DiskBump { center, radius, amp: 1.0 }
    };
    (0..n)
        .map(|_| {
            let f1 = disk(&mut rng, 0.6, 1.6, 0.2, 0.6);
            let f2 = disk(&mut rng, 0.6, 1.6, 0.2, 0.6);
            let f3 = disk(&mut rng, 0.8, 1.5, 0.25, 0.55);
            let f4 = disk(&mut rng, 0.0, 1.0, 0.6, 1.4);
            TestFnOnG::BruhatSplit { f1, f2, f3, f4 }
        })
        .collect()
}

/// Least-squares slope of `log y` against `log x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = xs.iter().zip(ys).map(|(x, y)| (x.ln(), y.ln())).collect();
    let n = pts.len() as f64;
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / n, pts.iter().map(|p| p.1).sum::<f64>() / n);
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// `log-log` slope of `sup_c |J(a, c, f)|` over large `|a|`.
pub fn nn_growth_slope(f: &TestFnOnG, a_moduli: &[f64], c_moduli: &[f64]) -> Result<f64> {
    let mut sups = Vec::with_capacity(a_moduli.len());
    for &ra in a_moduli {
        let mut s = 0.0f64;
        for &rc in c_moduli {
            let a = Complex64::from_polar(ra, 0.3);
            s = s.max(orbital_nn_app(a, Complex64::from_polar(rc, -0.7), f)?.value.norm());
        }
        sups.push(s);
    }
    if sups.iter().any(|s| !(*s > 0.0)) {
        return Err(Error::SupportResolution("J vanishes on part of the slope grid".into()));
    }
    Ok(log_log_slope(a_moduli, &sups))
}

/// `log-log` slope of `sup_c |M(x, c, f)|` over small `|x|`.
pub fn an_growth_slope(f: &TestFnOnG, x_moduli: &[f64], c_moduli: &[f64]) -> Result<f64> {
    let mut sups = Vec::with_capacity(x_moduli.len());
    for &rx in x_moduli {
        let mut s = 0.0f64;
        for &rc in c_moduli {
            let x = Complex64::from_polar(rx, 1.1);
            s = s.max(orbital_an_app(x, Complex64::from_polar(rc, 0.4), f)?.value.norm());
        }
        sups.push(s);
    }
    if sups.iter().any(|s| !(*s > 0.0)) {
        return Err(Error::SupportResolution("M vanishes on part of the slope grid".into()));
    }
    Ok(log_log_slope(x_moduli, &sups))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: Complex64, b: Complex64) -> f64 {
        (a - b).norm() / b.norm()
    }

    #[test]
    fn bump_transforms_match_oracles() {
        assert!((radial_ft(0.0) - 1.268112161127596).abs() < 1e-13);
        assert!((radial_ft(3.0) - 0.005112280663945298).abs() < 1e-13);
        let sq = two_disk_overlap(ZERO, 0.7, ZERO, 0.7, None);
        assert!((sq.re - 0.49 * 0.8712979968941913).abs() < 1e-11, "{sq}");
    }

    #[test]
    fn disk_bump_integrals_match_quadrature() {
        let b = DiskBump::new(cx(0.8, -0.4), 0.5).unwrap();
        let leb = disk_polar(|z| cx(b.value(z), 0.0), b.center, b.radius, 4, 64);
        assert!((leb.re - b.lebesgue_mass()).abs() < 1e-12);
        let chi = AdditiveCharacter::new(cx(0.6, 1.1)).unwrap();
        let num = disk_polar(|z| chi.psi(z) * b.value(z), b.center, b.radius, 8, 256) * chi.measure_factor();
        assert!(rel(b.psi_integral(&chi), num) < 1e-10);
    }

    #[test]
    fn reduced_nn_matches_tensor_rule() {
        let f = TestFnOnG::entrywise(1.0, 0.05, 2.0).unwrap();
        let (a, c) = (cx(0.7, 0.3), cx(0.5, -0.2));
        let r = orbital_nn_app(a, c, &f).unwrap();
        let t = orbital_nn_app_tensor(a, c, &f).unwrap();
        assert!(rel(t, r.value) < 1e-4, "{} vs {t}", r.value);
        assert!(r.err_estimate < 1e-8 * r.value.norm());
    }

    #[test]
    fn structural_zeros_are_exact() {
        let f = TestFnOnG::entrywise(1.0, 0.25, 2.0).unwrap();
        // delta^{1/2} / M = 0.5.
        let a = cx(0.3, 0.35);
        assert!(nn_structurally_zero(a, &f));
        let v = orbital_nn_app(a, cx(0.6, 0.1), &f).unwrap();
        assert!(v.structural_zero && v.value == ZERO);
        assert_eq!(orbital_nn_app_tensor(a, cx(0.6, 0.1), &f).unwrap(), ZERO);
        // M^2 / delta = 4.
        let x = cx(3.0, -2.8);
        assert!(an_structurally_zero(x, &f));
        assert!(orbital_an_app(x, cx(0.7, 0.0), &f).unwrap().structural_zero);
        assert!(!an_structurally_zero(cx(0.1, 0.0), &f));
        // c outside the determinant annulus.
        assert_eq!(orbital_nn_app(cx(1.0, 0.0), cx(0.4, 0.0), &f).unwrap().value, ZERO);
    }

    fn sample_split() -> TestFnOnG {
        TestFnOnG::split(
            DiskBump::new(cx(1.0, 0.2), 0.4).unwrap(),
            DiskBump::new(cx(-0.5, 0.9), 0.3).unwrap(),
            DiskBump::new(cx(0.9, -0.6), 0.4).unwrap(),
            DiskBump::new(cx(0.2, 0.1), 0.6).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn split_nn_matches_direct_quadrature() {
        let f = sample_split();
        let TestFnOnG::BruhatSplit { f3, f4, .. } = f else { unreachable!() };
        let (a, c) = (Complex64::from_polar(1.02, 0.1), cx(-0.4, 1.0));
        let base = GroupElement::z(c) * GroupElement::s(a) * GroupElement::w0();
        let a2 = a * a;
        let num = disk_polar(
            |x| {
                disk_polar(
                    |y| cx(f.value(&(GroupElement::n(x) * base * GroupElement::n(y))), 0.0),
                    f4.center,
                    f4.radius,
                    4,
                    48,
                )
            },
            f3.center * a2,
            f3.radius * a2.norm(),
            4,
            48,
        ) * 4.0;
        let v = orbital_nn_app(a, c, &f).unwrap().value;
        assert!(v.norm() > 1e-3);
        assert!(rel(num, v) < 1e-9, "{num} vs {v}");
    }

    #[test]
    fn split_an_matches_direct_quadrature() {
        let f = sample_split();
        let TestFnOnG::BruhatSplit { f2, f4, .. } = f else { unreachable!() };
        let (x, c) = (cx(0.95, -0.5), Complex64::from_polar(1.02, 2.0));
        // a runs over c / (support of f2).
        let (lo, hi) = (c.norm() / (f2.center.norm() + f2.radius), c.norm() / (f2.center.norm() - f2.radius));
        let num = gl_composite(
            |t| {
                let r = t.exp();
                let n = 256;
                let ring: Vec<Complex64> = (0..n)
                    .map(|k| {
                        let a = Complex64::from_polar(r, 2.0 * PI * k as f64 / n as f64);
                        let g = GroupElement::s(a) * GroupElement::z(c) * GroupElement::n(x) * GroupElement::w0();
                        disk_polar(|y| cx(f.value(&(g * GroupElement::n(y))), 0.0), f4.center, f4.radius, 2, 32)
                    })
                    .collect();
                pairwise(&ring) * (2.0 * PI / n as f64)
            },
            lo.ln(),
            hi.ln(),
            6,
        ) * 4.0;
        let v = orbital_an_app(x, c, &f).unwrap().value;
        assert!(v.norm() > 1e-3);
        // The brute-force reference is the coarser of the two here.
        assert!(rel(num, v) < 1e-4, "{num} vs {v}");
    }

    #[test]
    fn twisted_integrals_reduce_to_untwisted_ones() {
        let f = TestFnOnG::entrywise(1.0, 0.5, 2.0).unwrap();
        let lam = 1e-7;
        let chi = AdditiveCharacter::new(cx(lam, 0.0)).unwrap();
        let a = cx(1.3, 0.4);
        let q = JSigmaOptions::default().quad;
        let o = orbital_nn_psi_with(&f, &BruhatCoordsS { x: ZERO, a, y: ZERO }, &chi, &q).unwrap();
        let j = orbital_nn_app(a, cx(1.0, 0.0), &f).unwrap();
        assert!(rel(o.value / (4.0 * lam * lam), j.value / 4.0) < 1e-4);

        // int M(x, c) d*c against O^AN(n(x) w0) / 2|lambda|.
        let x = cx(0.3, 0.2);
        let o = orbital_an_psi_with(&f, &(GroupElement::n(x) * GroupElement::w0()), &chi, &q).unwrap();
        let (lo, hi) = (0.5f64.sqrt().ln(), 2f64.sqrt().ln());
        let m = gl_composite(|t| orbital_an_app(x, cx(t.exp(), 0.0), &f).unwrap().value, lo, hi, 2) * (4.0 * PI);
        assert!(rel(o.value / (2.0 * lam), m) < 1e-4, "{} vs {m}", o.value / (2.0 * lam));
    }

    #[test]
    fn twisted_nn_shift_covariance() {
        let f = TestFnOnG::entrywise(1.0, 0.5, 2.0).unwrap();
        let chi = AdditiveCharacter::new(cx(0.4, 0.2)).unwrap();
        let q = JSigmaOptions::default().quad;
        let a = cx(1.2, 0.1);
        let base = orbital_nn_psi_with(&f, &BruhatCoordsS { x: ZERO, a, y: ZERO }, &chi, &q).unwrap().value;
        let (x0, y0) = (cx(0.3, -0.7), cx(-1.1, 0.2));
        let moved = orbital_nn_psi_with(&f, &BruhatCoordsS { x: x0, a, y: y0 }, &chi, &q).unwrap().value;
        assert!(rel(moved, base * chi.psi(-x0) * chi.psi(-y0)) < 1e-14);
    }

    #[test]
    fn j_sigma_vanishes_below_support() {
        let h = TestFnOnG::entrywise(1.0, 0.5, 2.0).unwrap();
        let chi = AdditiveCharacter::new(cx(1.0, 0.0)).unwrap();
        let opts = JSigmaOptions { a_max: 0.9, ..Default::default() };
        let v = distribution_j_sigma(&RepParam::sl2(cx(0.0, 0.1), 0), &chi, &h, &opts).unwrap();
        assert!(v.structural_zero && v.value == ZERO);
    }

    #[test]
    fn unmatched_pairs_draw_no_conclusion() {
        let f = sample_split();
        let h = TestFnOnG::entrywise(1.0, 0.5, 2.0).unwrap();
        let chi = AdditiveCharacter::new(cx(1.0, 0.0)).unwrap();
        let p = RepParam::gl2(cx(0.0, 0.2), 0);
        let r = transfer_identity_check(&p, &chi, cx(1.0, 0.0), &f, &h, &[cx(3.6, -2.4)], &JSigmaOptions::default()).unwrap();
        assert!(!r.matched && r.lhs.is_none() && r.rhs.is_none());
        assert!(r.matching_residual > TOL_MATCHING);
    }

    #[test]
    fn slopes_and_sampler() {
        let xs = [1.0, 2.0, 4.0, 8.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(2.5)).collect();
        assert!((log_log_slope(&xs, &ys) - 2.5).abs() < 1e-12);
        let fs = draw_split_test_functions(5, 11);
        assert_eq!(fs, draw_split_test_functions(5, 11));
        for f in &fs {
            let TestFnOnG::BruhatSplit { f1, f2, f3, .. } = f else { panic!() };
            assert!(f1.avoids_zero() && f2.avoids_zero() && f3.avoids_zero());
        }
    }

    #[test]
    fn test_functions_round_trip_through_json() {
        for f in [TestFnOnG::entrywise(1.5, 0.1, 3.0).unwrap(), sample_split()] {
            let s = serde_json::to_string(&f).unwrap();
            assert_eq!(serde_json::from_str::<TestFnOnG>(&s).unwrap(), f);
        }
    }
}
