//! Special-function engine: complex gamma, `J_nu` and `K_nu` of complex
//! order.

pub mod bessel;
mod dd;
pub mod gamma;
pub mod kbessel;

pub use bessel::{
    bessel_j, bessel_j_asymptotic, bessel_j_estimate, bessel_j_series, bessel_j_tracked,
    hankel_asymptotic, hankel_asymptotic_scaled, Estimate, HankelPair, Scaled, ScaledHankelPair,
};
pub use gamma::{cos_pi, gamma, rgamma, sin_pi};
pub use kbessel::{bessel_k, bessel_k_complex};

use crate::Complex64;

/// Complex values are plain `Complex64`; finiteness is checked at the
/// engine boundary and NaN is reported as an error.
pub type ComplexValue = Complex64;

/// Numerical knobs shared by the special-function evaluators.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecisionPolicy {
    /// Base radius below which the ascending series is used; `|nu|` is
    /// added on top.
    pub series_cutoff_radius: f64,
    /// Maximum number of terms of the asymptotic expansion.
    pub asymptotic_terms: usize,
    pub target_rel_tol: f64,
}

impl Default for PrecisionPolicy {
    fn default() -> Self {
        PrecisionPolicy { series_cutoff_radius: 25.0, asymptotic_terms: 80, target_rel_tol: 1e-12 }
    }
}

impl PrecisionPolicy {
    pub fn new(series_cutoff_radius: f64, asymptotic_terms: usize, target_rel_tol: f64) -> crate::Result<Self> {
        if !(series_cutoff_radius > 0.0) || asymptotic_terms == 0 || !(target_rel_tol > 0.0) {
            return Err(crate::Error::InvalidArgument(
                "precision policy needs positive radius, terms and tolerance".into(),
            ));
        }
        Ok(PrecisionPolicy { series_cutoff_radius, asymptotic_terms, target_rel_tol })
    }

    pub fn cutoff_for(&self, nu: Complex64) -> f64 {
        self.series_cutoff_radius + nu.norm()
    }
}
