//! Suite report records.

use crate::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Floor used in relative errors, so that two exact zeros compare equal.
pub const REL_FLOOR: f64 = 1e-300;

/// Serializes a complex number as `{"re": .., "im": ..}`.
pub mod complex_obj {
    use super::*;
    use serde::{Deserializer, Serializer};

    #[derive(Serialize, Deserialize)]
    struct ReIm {
        re: f64,
        im: f64,
    }

    pub fn serialize<S: Serializer>(z: &Complex64, s: S) -> Result<S::Ok, S::Error> {
        ReIm { re: z.re, im: z.im }.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Complex64, D::Error> {
        let r = ReIm::deserialize(d)?;
        Ok(Complex64::new(r.re, r.im))
    }
}

/// As [`complex_obj`] for optional values, `null` when absent.
pub mod complex_opt {
    use super::*;
    use serde::Serializer;

    pub fn serialize<S: Serializer>(z: &Option<Complex64>, s: S) -> Result<S::Ok, S::Error> {
        match z {
            Some(z) => complex_obj::serialize(z, s),
            None => s.serialize_none(),
        }
    }
}

/// Quadrature bookkeeping attached to a report.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub lhs_err: f64,
    pub rhs_err: f64,
    pub notes: Vec<String>,
}

/// One verified parameter point: both sides of an identity and their gap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: String,
    pub params: BTreeMap<String, String>,
    #[serde(with = "complex_obj")]
    pub lhs: Complex64,
    #[serde(with = "complex_obj")]
    pub rhs: Complex64,
    pub abs_err: f64,
    pub rel_err: f64,
    pub tolerance: f64,
    /// Absolute tolerance used instead of `tolerance` when the exact value
    /// is zero and relative error is meaningless.
    pub abs_tolerance: Option<f64>,
    pub evals: u64,
    pub runtime_ms: Option<f64>,
    pub flags: Vec<String>,
    pub diagnostics: Diagnostics,
}

pub fn rel_err(lhs: Complex64, rhs: Complex64) -> f64 {
    (lhs - rhs).norm() / lhs.norm().max(rhs.norm()).max(REL_FLOOR)
}

/// Formats a complex number as `a+bi`, the same form the CLI parses.
pub fn fmt_complex(z: Complex64) -> String {
    if z.im < 0.0 || (z.im == 0.0 && z.im.is_sign_negative()) {
        format!("{}-{}i", z.re, -z.im)
    } else {
        format!("{}+{}i", z.re, z.im)
    }
}

impl SuiteReport {
    pub fn new(suite: &str, params: BTreeMap<String, String>, lhs: Complex64, rhs: Complex64, tolerance: f64) -> Self {
        SuiteReport {
            suite: suite.to_string(),
            params,
            lhs,
            rhs,
            abs_err: (lhs - rhs).norm(),
            rel_err: rel_err(lhs, rhs),
            tolerance,
            abs_tolerance: None,
            evals: 0,
            runtime_ms: None,
            flags: Vec::new(),
            diagnostics: Diagnostics::default(),
        }
    }

    /// A record for a point whose computation failed; it never passes.
    pub fn failed(suite: &str, params: BTreeMap<String, String>, tolerance: f64, why: String) -> Self {
        let nan = Complex64::new(f64::NAN, f64::NAN);
        let mut r = SuiteReport::new(suite, params, nan, nan, tolerance);
        r.flags.push("error".into());
        r.diagnostics.notes.push(why);
        r
    }

    /// A one-sided check `value <= bound` (or `>=`). `lhs` holds the
    /// value, `rhs` and `tolerance` the bound, and the error fields are zero.
    pub fn bound_check(suite: &str, params: BTreeMap<String, String>, value: f64, bound: f64, at_most: bool) -> Self {
        let mut r = SuiteReport::new(suite, params, Complex64::new(value, 0.0), Complex64::new(bound, 0.0), bound);
        r.abs_err = 0.0;
        r.rel_err = 0.0;
        r.flags.push(if at_most { "upper_bound" } else { "lower_bound" }.into());
        let ok = if at_most { value <= bound } else { value >= bound };
        if !ok {
            r.flags.push("bound_violated".into());
        }
        r
    }

    pub fn passed(&self) -> bool {
        if self.flags.iter().any(|f| f == "upper_bound" || f == "lower_bound") {
            return !self.flags.iter().any(|f| f == "bound_violated" || f == "error");
        }
        let within = self.rel_err < self.tolerance || self.abs_tolerance.is_some_and(|t| self.abs_err < t);
        within && !self.flags.iter().any(|f| f == "error")
    }
}

/// Builds a parameter map from `(key, value)` pairs.
pub fn params<const N: usize>(kv: [(&str, String); N]) -> BTreeMap<String, String> {
    kv.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}
