//! Complex-order Bessel kernels over C and the identities they satisfy.
//!
//! The crate is layered bottom-up:
//!
//! * [`special`]: complex gamma, `J_nu(z)` and `K_nu` of complex order.
//! * [`besselc`]: the product `J_{mu,m}(z)` and the Bessel function over C,
//!   `bold J_{mu,m}(z)`, with branch bookkeeping and nongeneric limits.
//! * [`group`]: `GL2(C)` / `SL2(C)` elements, Bruhat coordinates, additive
//!   characters, and the scalar L, epsilon, Weil and transfer factors.
//! * [`kernels`]: the Bessel function of a representation on `GL2` and `SL2`,
//!   the relative Bessel function, and the Bessel identity residual.
//! * [`quad`]: regularized half-line and polar plane quadrature.
//! * [`identities`]: verification suites producing [`report::SuiteReport`]s.
//! * [`orbital`]: orbital integrals and the distributions built from them.
//! * [`cli`]: the command-line runner.

pub mod besselc;
pub mod cli;
pub mod error;
pub mod group;
pub mod identities;
pub mod kernels;
pub mod orbital;
pub mod quad;
pub mod report;
pub mod special;
pub mod sum;

pub use error::{Error, Result};
pub use num_complex::Complex64;
