//! Quadrature engines.
//!
//! * [`integrate_halfline_osc`]: `int_0^inf f(x) dx` for conditionally
//!   convergent oscillatory `f`, via the damped family
//!   `I(eps) = int f(x) e^{-eps x} dx` and polynomial extrapolation to
//!   `eps = 0`.
//! * [`integrate_plane`]: polar quadrature over an annulus `delta <= |z| <= R`
//!   with an explicit bound for the discarded inner disk.
//! * [`integrate_disk_arcs`]: a plain polar Gauss rule on a disk, with the
//!   angle split into arcs so that integrands with angular kinks at known
//!   angles stay spectrally accurate.
//! * [`GaussianTestFn`]: modulated Gaussians with closed-form Fourier
//!   transforms.
//!
//! All sums are reduced pairwise in a fixed order, so results do not depend
//! on the number of worker threads.

use crate::group::{e, AdditiveCharacter};
use crate::sum::{pairwise, pairwise_real};
use crate::{Complex64, Error, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::OnceLock;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Value with error estimate and number of integrand evaluations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadResult {
    pub value: Complex64,
    pub err_estimate: f64,
    pub evaluations: u64,
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`, by Newton iteration on
/// the Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut t = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0f64, t);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * t * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (t * p1 - p0) / (t * t - 1.0);
            let dt = p1 / dp;
            t -= dt;
            if dt.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -t;
        x[n - 1 - i] = t;
        let wi = 2.0 / ((1.0 - t * t) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

fn gl16() -> &'static (Vec<f64>, Vec<f64>) {
    static R: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    R.get_or_init(|| gauss_legendre(16))
}

/// Nodes and weights mapped to `[a, b]`.
fn mapped(rule: &(Vec<f64>, Vec<f64>), a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
    let h = 0.5 * (b - a);
    let m = 0.5 * (a + b);
    rule.0.iter().zip(&rule.1).map(move |(&x, &w)| (m + h * x, h * w))
}

// ---------------------------------------------------------------------------
// Half line
// ---------------------------------------------------------------------------

/// Options for [`integrate_halfline_osc`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalflineOptions {
    /// Strictly decreasing damping parameters.
    pub eps_schedule: Vec<f64>,
    /// Number of trailing schedule points used in the extrapolation.
    pub richardson_points: usize,
    /// Width of the first (tanh-sinh) panel and of the Gauss panels.
    pub panel_width: f64,
    /// Point beyond which the integrand is known to be negligible, if any.
    pub x_cutoff: Option<f64>,
    /// Relative tolerance for panel refinement.
    pub panel_tol: f64,
    /// Relative tolerance above which the extrapolation is rejected.
    pub extrap_tol: f64,
}

impl Default for HalflineOptions {
    fn default() -> Self {
        HalflineOptions {
            eps_schedule: (0..=8).map(|k| 0.4 * 0.5f64.powi(k)).collect(),
            richardson_points: 5,
            panel_width: 0.5,
            x_cutoff: None,
            panel_tol: 1e-11,
            extrap_tol: 1e-7,
        }
    }
}

/// Per-damping sums over one panel, with the panel's refinement error and
/// absolute mass (both for the undamped integrand).
struct PanelSums {
    sums: Vec<Complex64>,
    err: f64,
    evals: u64,
}

fn weighted_sums(nodes: &[(f64, f64, Complex64)], eps: &[f64]) -> Vec<Complex64> {
    eps.iter()
        .map(|&ep| {
            let terms: Vec<Complex64> = nodes.iter().map(|&(x, w, v)| v * (w * (-ep * x).exp())).collect();
            pairwise(&terms)
        })
        .collect()
}

fn gl_nodes<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64) -> Vec<(f64, f64, Complex64)> {
    mapped(gl16(), a, b).map(|(x, w)| (x, w, f(x))).collect()
}

fn panel_value(nodes: &[(f64, f64, Complex64)]) -> (Complex64, f64) {
    let v: Vec<Complex64> = nodes.iter().map(|&(_, w, f)| f * w).collect();
    let m: Vec<f64> = nodes.iter().map(|&(_, w, f)| f.norm() * w).collect();
    (pairwise(&v), pairwise_real(&m))
}

/// Gauss panel on `[a, b]`, bisected until the whole and the two halves
/// agree. Returns the refined node set.
fn adaptive_gl<F: Fn(f64) -> Complex64>(
    f: &F,
    a: f64,
    b: f64,
    whole: Vec<(f64, f64, Complex64)>,
    tol: f64,
    depth: u32,
    parent_diff: f64,
    out: &mut Vec<(f64, f64, Complex64)>,
) -> (f64, u64) {
    let mid = 0.5 * (a + b);
    let left = gl_nodes(f, a, mid);
    let right = gl_nodes(f, mid, b);
    let (qw, _) = panel_value(&whole);
    let (ql, ml) = panel_value(&left);
    let (qr, mr) = panel_value(&right);
    let diff = (qw - ql - qr).norm();
    let evals = 32u64;
    // A resolved panel shrinks the difference by orders of magnitude per
    // bisection; one that does not is at the rounding floor of f.
    let at_floor = diff > 0.25 * parent_diff && diff <= 1e3 * tol * (ml + mr);
    if diff <= tol * (ml + mr) + 1e-300 || depth >= 12 || at_floor {
        out.extend(left);
        out.extend(right);
        return (diff, evals);
    }
    let (e1, n1) = adaptive_gl(f, a, mid, left, tol, depth + 1, diff, out);
    let (e2, n2) = adaptive_gl(f, mid, b, right, tol, depth + 1, diff, out);
    (e1 + e2, evals + n1 + n2)
}

/// Tanh-sinh rule on `[0, w]`, refined until successive levels agree.
/// Handles integrable endpoint singularities at 0.
fn tanh_sinh_first_panel<F: Fn(f64) -> Complex64>(f: &F, w: f64, tol: f64) -> (Vec<(f64, f64, Complex64)>, f64) {
    // x(t) = w / (1 + exp(-pi sinh t)), computed so tiny x keep full
    // relative precision.
    let node = |t: f64| -> Option<(f64, f64)> {
        let s = PI * t.sinh();
        let q = (-s).exp();
        let x = w / (1.0 + q);
        let dx = w * PI * t.cosh() * q / ((1.0 + q) * (1.0 + q));
        if !(x > 0.0) || !(x < w) || !(dx > 0.0) || !dx.is_finite() {
            None
        } else {
            Some((x, dx))
        }
    };
    let t_max = 6.5;
    let mut values: Vec<(f64, f64, Complex64)> = Vec::new();
    let push = |t: f64, values: &mut Vec<(f64, f64, Complex64)>| {
        if let Some((x, dx)) = node(t) {
            values.push((x, dx, f(x)));
        }
    };
    let mut h = 0.5;
    let n0 = (t_max / h) as i64;
    for k in -n0..=n0 {
        push(k as f64 * h, &mut values);
    }
    let mut nodes: Vec<(f64, f64, Complex64)> = Vec::new();
    let mut prev = ZERO;
    let mut err = f64::INFINITY;
    for level in 0..8 {
        nodes = values.iter().map(|&(x, dx, v)| (x, dx * h, v)).collect();
        let (s, mass) = panel_value(&nodes);
        if level > 0 {
            err = (s - prev).norm();
            if err <= tol * mass.max(1e-300) * 10.0 {
                break;
            }
        }
        prev = s;
        h /= 2.0;
        let n = (t_max / h) as i64;
        let mut j = -n + if n % 2 == 0 { 1 } else { 0 };
        while j <= n {
            push(j as f64 * h, &mut values);
            j += 2;
        }
    }
    (nodes, err)
}

/// Neville evaluation at 0 of the interpolant through `(x_i, y_i)`.
pub fn neville_at_zero(xs: &[f64], ys: &[Complex64]) -> Complex64 {
    let mut p: Vec<Complex64> = ys.to_vec();
    let n = xs.len();
    for k in 1..n {
        for i in 0..n - k {
            let (xi, xk) = (xs[i], xs[i + k]);
            p[i] = (p[i] * (-xk) - p[i + 1] * (-xi)) / (xi - xk);
        }
    }
    p[0]
}

/// `int_0^inf f(x) dx` by damping with `e^{-eps x}` and extrapolating
/// `eps -> 0` through the last `richardson_points` schedule values.
///
/// The reported error adds the panel refinement errors to the spread
/// between the extrapolants from the last and the shifted-by-one windows.
pub fn integrate_halfline_osc<F>(f: F, opts: &HalflineOptions) -> Result<QuadResult>
where
    F: Fn(f64) -> Complex64 + Sync,
{
    let eps = &opts.eps_schedule;
    let k = opts.richardson_points;
    if eps.len() < k + 1 || k < 2 || eps.windows(2).any(|w| !(w[1] < w[0])) || !(eps[eps.len() - 1] > 0.0) {
        return Err(Error::InvalidArgument("eps schedule must be decreasing, positive, longer than the window".into()));
    }
    let eps_min = eps[eps.len() - 1];
    let mut x_end = 40.0 / eps_min;
    if let Some(c) = opts.x_cutoff {
        x_end = x_end.min(c);
    }
    let w = opts.panel_width.min(x_end);

    let (first_nodes, first_err) = tanh_sinh_first_panel(&f, w, opts.panel_tol);
    let first = PanelSums {
        sums: weighted_sums(&first_nodes, eps),
        err: first_err,
        evals: first_nodes.len() as u64,
    };

    let n_panels = ((x_end - w) / w).ceil().max(0.0) as usize;
    let panels: Vec<PanelSums> = (0..n_panels)
        .into_par_iter()
        .map(|i| {
            let a = w + i as f64 * w;
            let b = (a + w).min(x_end);
            let whole = gl_nodes(&f, a, b);
            let mut nodes = Vec::new();
            let (err, evals) = adaptive_gl(&f, a, b, whole, opts.panel_tol, 0, f64::INFINITY, &mut nodes);
            PanelSums { sums: weighted_sums(&nodes, eps), err, evals: evals + 16 }
        })
        .collect();

    let mut totals = Vec::with_capacity(eps.len());
    for j in 0..eps.len() {
        let mut col: Vec<Complex64> = Vec::with_capacity(panels.len() + 1);
        col.push(first.sums[j]);
        col.extend(panels.iter().map(|p| p.sums[j]));
        totals.push(pairwise(&col));
    }
    let panel_err = first.err + pairwise_real(&panels.iter().map(|p| p.err).collect::<Vec<_>>());
    let evaluations = first.evals + panels.iter().map(|p| p.evals).sum::<u64>();

    let n = eps.len();
    let main = neville_at_zero(&eps[n - k..], &totals[n - k..]);
    let shifted = neville_at_zero(&eps[n - k - 1..n - 1], &totals[n - k - 1..n - 1]);
    let spread = (main - shifted).norm();
    let err_estimate = spread + panel_err;
    // Scaled by the damped values so that an integral that vanishes in the
    // limit is not mistaken for a divergent one.
    let scale = totals.iter().map(|t| t.norm()).fold(main.norm(), f64::max);
    if spread > opts.extrap_tol * scale.max(1e-300) {
        return Err(Error::NonConvergence(format!(
            "eps extrapolation spread {spread:e} exceeds tolerance (value {main})"
        )));
    }
    Ok(QuadResult { value: main, err_estimate, evaluations })
}

// ---------------------------------------------------------------------------
// Plane
// ---------------------------------------------------------------------------

/// Resolution parameters for [`integrate_plane`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaneQuadSpec {
    /// Inner radius `delta`; the disk `|z| < delta` is bounded, not sampled.
    pub r_inner: f64,
    /// Outer radius `R`; the region `|z| > R` is covered by a caller bound.
    pub r_outer: f64,
    /// Number of log-graded radial panels before refinement.
    pub radial_panels: usize,
    /// Relative tolerance for radial refinement.
    pub panel_tol: f64,
    /// Angular points satisfy `N >= angular_factor * bw(r) + angular_min`.
    pub angular_factor: f64,
    pub angular_min: usize,
    /// Samples with `|z| <= r_envelope` are checked against the envelope.
    pub r_envelope: f64,
    /// Add the envelope bound for `|z| < delta` to the error. Off when the
    /// caller integrates the inner disk by other means.
    pub bound_inner_disk: bool,
}

impl PlaneQuadSpec {
    pub fn new(r_inner: f64, r_outer: f64) -> Self {
        PlaneQuadSpec {
            r_inner,
            r_outer,
            radial_panels: ((r_outer / r_inner).log10().ceil() as usize).max(4),
            panel_tol: 1e-10,
            angular_factor: 2.5,
            angular_min: 32,
            r_envelope: 10.0 * r_inner,
            bound_inner_disk: true,
        }
    }

    /// Uniform doubling: twice the radial panels and angular margin.
    pub fn doubled(&self) -> Self {
        PlaneQuadSpec {
            radial_panels: 2 * self.radial_panels,
            angular_factor: 2.0 * self.angular_factor,
            angular_min: 2 * self.angular_min,
            panel_tol: self.panel_tol / 4.0,
            ..self.clone()
        }
    }
}

/// Declared bound `|f(z)| <= c |z|^alpha` near the origin, with `alpha > -2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InnerEnvelope {
    pub c: f64,
    pub alpha: f64,
}

impl InnerEnvelope {
    pub fn at(&self, r: f64) -> f64 {
        self.c * r.powf(self.alpha)
    }
    /// `int_{|z|<delta} c |z|^alpha dLeb`.
    pub fn disk_bound(&self, delta: f64) -> f64 {
        2.0 * PI * self.c * delta.powf(self.alpha + 2.0) / (self.alpha + 2.0)
    }
}

struct Ring {
    value: Complex64,
    err: f64,
    mass: f64,
    evals: u64,
}

fn ring<F: Fn(Complex64) -> Complex64>(
    f: &F,
    r: f64,
    bw: f64,
    spec: &PlaneQuadSpec,
    env: &InnerEnvelope,
) -> Result<Ring> {
    let want = spec.angular_factor * bw.max(0.0) + spec.angular_min as f64;
    let n = ((want / 8.0).ceil() as usize).max(1) * 8;
    let h = 2.0 * PI / n as f64;
    let vals: Vec<Complex64> = (0..n).map(|k| f(Complex64::from_polar(r, k as f64 * h))).collect();
    if r <= spec.r_envelope {
        let bound = env.at(r);
        if let Some(v) = vals.iter().find(|v| v.norm() > 10.0 * bound) {
            return Err(Error::EnvelopeViolation { r, value: v.norm(), bound });
        }
    }
    if let Some(v) = vals.iter().find(|v| !(v.re.is_finite() && v.im.is_finite())) {
        let _ = v;
        return Err(Error::NotANumber("plane integrand"));
    }
    let full = pairwise(&vals) * h;
    let half: Vec<Complex64> = vals.iter().step_by(2).copied().collect();
    let coarse = pairwise(&half) * (2.0 * h);
    let mass = pairwise_real(&vals.iter().map(|v| v.norm()).collect::<Vec<_>>()) * h;
    Ok(Ring { value: full, err: (full - coarse).norm(), mass, evals: n as u64 })
}

/// Gauss panel in `t = ln r` on `[t0, t1]`: nodes `(weight, ring)`.
fn radial_panel<F, B>(f: &F, bw: &B, t0: f64, t1: f64, spec: &PlaneQuadSpec, env: &InnerEnvelope) -> Result<Vec<(f64, Ring)>>
where
    F: Fn(Complex64) -> Complex64,
    B: Fn(f64) -> f64,
{
    mapped(gl16(), t0, t1)
        .map(|(t, w)| {
            let r = t.exp();
            // dLeb = r dr dtheta = r^2 dt dtheta
            ring(f, r, bw(r), spec, env).map(|g| (w * r * r, g))
        })
        .collect()
}

fn combine(nodes: &[(f64, Ring)]) -> (Complex64, f64, f64, u64) {
    let v: Vec<Complex64> = nodes.iter().map(|(w, g)| g.value * *w).collect();
    let e: Vec<f64> = nodes.iter().map(|(w, g)| g.err * *w).collect();
    let m: Vec<f64> = nodes.iter().map(|(w, g)| g.mass * *w).collect();
    (pairwise(&v), pairwise_real(&e), pairwise_real(&m), nodes.iter().map(|(_, g)| g.evals).sum())
}

#[allow(clippy::too_many_arguments)]
fn adaptive_radial<F, B>(
    f: &F,
    bw: &B,
    t0: f64,
    t1: f64,
    whole: Vec<(f64, Ring)>,
    spec: &PlaneQuadSpec,
    env: &InnerEnvelope,
    depth: u32,
    parent_diff: f64,
) -> Result<(Complex64, f64, u64)>
where
    F: Fn(Complex64) -> Complex64,
    B: Fn(f64) -> f64,
{
    let tm = 0.5 * (t0 + t1);
    let left = radial_panel(f, bw, t0, tm, spec, env)?;
    let right = radial_panel(f, bw, tm, t1, spec, env)?;
    let (qw, _, _, _) = combine(&whole);
    let (ql, el, ml, nl) = combine(&left);
    let (qr, er, mr, nr) = combine(&right);
    let diff = (qw - ql - qr).norm();
    let evals = nl + nr;
    let at_floor = diff > 0.25 * parent_diff && diff <= 1e3 * spec.panel_tol * (ml + mr);
    if diff <= spec.panel_tol * (ml + mr) + 1e-300 || depth >= 10 || at_floor {
        return Ok((ql + qr, diff + el + er, evals));
    }
    let (vl, el2, n1) = adaptive_radial(f, bw, t0, tm, left, spec, env, depth + 1, diff)?;
    let (vr, er2, n2) = adaptive_radial(f, bw, tm, t1, right, spec, env, depth + 1, diff)?;
    Ok((vl + vr, el2 + er2, evals + n1 + n2))
}

/// `int_{delta <= |z| <= R} f(z) dLeb(z)` plus the disk bound in the error.
///
/// `bw(r)` is the angular bandwidth at radius `r`; `tail_bound` bounds the
/// discarded region `|z| > R` and is added to the error estimate.
pub fn integrate_plane<F, B>(f: F, bw: B, env: InnerEnvelope, spec: &PlaneQuadSpec, tail_bound: f64) -> Result<QuadResult>
where
    F: Fn(Complex64) -> Complex64 + Sync,
    B: Fn(f64) -> f64 + Sync,
{
    if !(spec.r_inner > 0.0 && spec.r_outer > spec.r_inner && env.alpha > -2.0 && spec.radial_panels > 0) {
        return Err(Error::InvalidArgument("plane quadrature needs 0 < delta < R, alpha > -2".into()));
    }
    let (la, lb) = (spec.r_inner.ln(), spec.r_outer.ln());
    let n = spec.radial_panels;
    let parts: Vec<Result<(Complex64, f64, u64)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let t0 = la + (lb - la) * i as f64 / n as f64;
            let t1 = la + (lb - la) * (i + 1) as f64 / n as f64;
            let whole = radial_panel(&f, &bw, t0, t1, spec, &env)?;
            let n0: u64 = whole.iter().map(|(_, g)| g.evals).sum();
            adaptive_radial(&f, &bw, t0, t1, whole, spec, &env, 0, f64::INFINITY).map(|(v, e, k)| (v, e, k + n0))
        })
        .collect();
    let mut vals = Vec::with_capacity(n);
    let mut errs = Vec::with_capacity(n);
    let mut evaluations = 0;
    for p in parts {
        let (v, e, k) = p?;
        vals.push(v);
        errs.push(e);
        evaluations += k;
    }
    let disk = if spec.bound_inner_disk { env.disk_bound(spec.r_inner) } else { 0.0 };
    let err_estimate = pairwise_real(&errs) + disk + tail_bound;
    Ok(QuadResult { value: pairwise(&vals), err_estimate, evaluations })
}

/// `int_{|z| < radius} f dLeb` by Gauss rules in `r` and on each angular arc.
///
/// Arcs are `(theta0, theta1)` pairs covering the circle. The error is the
/// difference against the rule with both orders halved.
pub fn integrate_disk_arcs<F>(mut f: F, radius: f64, arcs: &[(f64, f64)], radial_order: usize, angular_order: usize) -> QuadResult
where
    F: FnMut(Complex64) -> Complex64,
{
    let mut rule = |nr: usize, na: usize| -> (Complex64, u64) {
        let rr = gauss_legendre(nr);
        let ra = gauss_legendre(na);
        let mut terms = Vec::with_capacity(nr * na * arcs.len());
        for (r, wr) in mapped(&rr, 0.0, radius) {
            for &(a0, a1) in arcs {
                for (th, wt) in mapped(&ra, a0, a1) {
                    terms.push(f(Complex64::from_polar(r, th)) * (wr * wt * r));
                }
            }
        }
        (pairwise(&terms), terms.len() as u64)
    };
    let (fine, n1) = rule(radial_order, angular_order);
    let (coarse, n2) = rule((radial_order / 2).max(1), (angular_order / 2).max(1));
    QuadResult { value: fine, err_estimate: (fine - coarse).norm(), evaluations: n1 + n2 }
}

// ---------------------------------------------------------------------------
// Gaussian test functions
// ---------------------------------------------------------------------------

/// `f(z) = amp * exp(-pi s |z - center|^2) * e(Tr(beta z))`, with
/// `Tr(w) = 2 Re w`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianTestFn {
    pub s: f64,
    pub beta: Complex64,
    pub center: Complex64,
    pub amp: Complex64,
}

impl GaussianTestFn {
    pub fn new(s: f64, beta: Complex64) -> Result<Self> {
        Self::general(s, beta, ZERO, Complex64::new(1.0, 0.0))
    }

    pub fn general(s: f64, beta: Complex64, center: Complex64, amp: Complex64) -> Result<Self> {
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::InvalidArgument(format!("Gaussian width must be positive, got {s}")));
        }
        Ok(GaussianTestFn { s, beta, center, amp })
    }

    pub fn value(&self, z: Complex64) -> Complex64 {
        let d = z - self.center;
        self.amp * (-PI * self.s * d.norm_sqr()).exp() * e(2.0 * (self.beta * z).re)
    }

    /// Fourier transform `int f(z) psi(z w) dz` with `dz = 2|lambda| dLeb`.
    /// The family is closed under this map.
    pub fn fourier(&self, chi: &AdditiveCharacter) -> GaussianTestFn {
        let lam = chi.lambda;
        let l2 = lam.norm_sqr();
        GaussianTestFn {
            s: 4.0 * l2 / self.s,
            beta: lam * self.center,
            center: -self.beta / lam,
            amp: self.amp * (2.0 * lam.norm() / self.s) * e(2.0 * (self.beta * self.center).re),
        }
    }
}

/// Closed-form Fourier transform of a Gaussian test function.
pub fn gaussian_fourier(f: &GaussianTestFn, chi: &AdditiveCharacter) -> GaussianTestFn {
    f.fourier(chi)
}
