//! Empirical-likelihood inference for the Generalized Pareto parameters
//! (γ, σ) of heavy-tailed data under the peaks-over-threshold method.
//!
//! The crate is `no_std` with `alloc`. Everything here is a pure function of
//! its arguments; randomness enters only through explicit [`rand_core::RngCore`]
//! streams (see [`rng`]). IO, the CLI and the parallel Monte-Carlo runner live
//! in the companion `gpd-elcr` crate.
//!
//! Module map:
//!
//! - [`statfun`]: log-gamma, incomplete gamma/beta, χ², F and normal quantiles.
//! - [`models`]: GPD, Fréchet and Burr models, sampling, excess extraction.
//! - [`zhang`]: Zhang's estimating equations and the Wald statistic.
//! - [`mle`]: GPD maximum likelihood.
//! - [`el_core`]: the empirical-likelihood ratio and its Lagrange solve.
//! - [`profile_ci`]: profile EL, ELW/ELP/Zhang intervals for γ, Hill estimator.
//! - [`regions`]: 2-d EL and Wald regions, marching-squares boundaries.
//! - [`sim`]: coverage experiments.
#![no_std]
// `!(x > 0.0)` deliberately rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod contour;
pub mod el_core;
mod error;
pub mod linalg;
pub mod math;
pub mod mle;
pub mod models;
pub mod optim;
pub mod profile_ci;
pub mod regions;
pub mod rng;
pub mod sim;
pub mod statfun;
pub mod zhang;

pub use error::{Error, Result};
pub use models::{ExcessSample, GpdParams, ModelSpec};
pub use statfun::Probability;

/// Default Zhang tuning parameter.
pub const DEFAULT_R: f64 = -0.5;

/// Critical-value calibration for EL statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Calibration {
    Chi2,
    Fisher,
}

impl Calibration {
    pub fn name(self) -> &'static str {
        match self {
            Calibration::Chi2 => "chi2",
            Calibration::Fisher => "fisher",
        }
    }
}

impl core::str::FromStr for Calibration {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "chi2" => Ok(Calibration::Chi2),
            "fisher" => Ok(Calibration::Fisher),
            other => Err(Error::InvalidArgument(alloc::format!(
                "unknown calibration `{other}` (expected chi2 or fisher)"
            ))),
        }
    }
}

/// Checks the Zhang tuning parameter: `r < 1/2` and `r != 0`.
pub fn check_r(r: f64) -> Result<()> {
    if !r.is_finite() || r >= 0.5 || r == 0.0 {
        return Err(Error::InvalidArgument(alloc::format!(
            "tuning parameter r must satisfy r < 1/2 and r != 0, got {r}"
        )));
    }
    Ok(())
}
