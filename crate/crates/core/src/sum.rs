//! Deterministic summation helpers.
//!
//! Every reduction that may run in parallel goes through [`pairwise`], which
//! fixes the association order by index so the result does not depend on how
//! work was scheduled.

use num_complex::Complex64;

/// Neumaier compensated accumulator for complex values.
#[derive(Debug, Clone, Copy, Default)]
pub struct Compensated {
    sum: Complex64,
    carry: Complex64,
}

#[inline]
fn neumaier(sum: &mut f64, carry: &mut f64, v: f64) {
    let t = *sum + v;
    if sum.abs() >= v.abs() {
        *carry += (*sum - t) + v;
    } else {
        *carry += (v - t) + *sum;
    }
    *sum = t;
}

impl Compensated {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, v: Complex64) {
        neumaier(&mut self.sum.re, &mut self.carry.re, v.re);
        neumaier(&mut self.sum.im, &mut self.carry.im, v.im);
    }

    pub fn value(&self) -> Complex64 {
        self.sum + self.carry
    }
}

/// Pairwise (cascade) sum in index order.
pub fn pairwise(values: &[Complex64]) -> Complex64 {
    match values.len() {
        0 => Complex64::new(0.0, 0.0),
        1 => values[0],
        n if n <= 8 => {
            let mut acc = Compensated::new();
            for &v in values {
                acc.add(v);
            }
            acc.value()
        }
        n => {
            let (lo, hi) = values.split_at(n / 2);
            pairwise(lo) + pairwise(hi)
        }
    }
}

/// Pairwise sum of reals.
pub fn pairwise_real(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        n if n <= 8 => {
            let (mut s, mut c) = (0.0, 0.0);
            for &v in values {
                neumaier(&mut s, &mut c, v);
            }
            s + c
        }
        n => {
            let (lo, hi) = values.split_at(n / 2);
            pairwise_real(lo) + pairwise_real(hi)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_recovers_small_terms() {
        let mut acc = Compensated::new();
        acc.add(Complex64::new(1e16, 0.0));
        for _ in 0..1000 {
            acc.add(Complex64::new(1.0, 0.0));
        }
        acc.add(Complex64::new(-1e16, 0.0));
        assert_eq!(acc.value().re, 1000.0);
    }

    #[test]
    fn pairwise_matches_naive_on_benign_input() {
        let v: Vec<Complex64> = (0..1000).map(|k| Complex64::new(k as f64, -(k as f64))).collect();
        let s = pairwise(&v);
        assert_eq!(s, Complex64::new(499500.0, -499500.0));
        assert_eq!(pairwise_real(&[1.0, 2.0, 3.0]), 6.0);
    }
}
