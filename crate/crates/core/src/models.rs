//! Heavy-tailed parametric models, inverse-CDF sampling and excess extraction.

use alloc::format;
use alloc::string::ToString;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand_core::RngCore;

use crate::math::{exp, exp_m1, ln, ln_1p, powf};
use crate::rng::uniform_open01;
use crate::statfun::Probability;
use crate::{Error, Result};

/// Generalized Pareto parameters: tail index γ > 0 and scale σ > 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GpdParams {
    pub gamma: f64,
    pub sigma: f64,
}

impl GpdParams {
    pub fn new(gamma: f64, sigma: f64) -> Result<Self> {
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(Error::Domain(format!(
                "GPD tail index must be > 0, got {gamma}"
            )));
        }
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::Domain(format!("GPD scale must be > 0, got {sigma}")));
        }
        Ok(GpdParams { gamma, sigma })
    }

    /// `σ((1−u)^{−γ} − 1)/γ`.
    pub fn quantile(&self, u: f64) -> f64 {
        self.sigma * exp_m1(-self.gamma * ln_1p(-u)) / self.gamma
    }

    /// `1 − (1 + γx/σ)^{−1/γ}` for `x ≥ 0`.
    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        -exp_m1(-ln_1p(self.gamma * x / self.sigma) / self.gamma)
    }

    pub fn survival(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 1.0;
        }
        exp(-ln_1p(self.gamma * x / self.sigma) / self.gamma)
    }
}

pub fn gpd_quantile(u: Probability, p: GpdParams) -> f64 {
    p.quantile(u.get())
}

/// A parametric model for the full sample.
///
/// The Burr model is parametrised by its survival function
/// `(1 + x^τ)^{−1/λ}`, so `F̄(x) ~ x^{−τ/λ}` and its tail index is `λ/τ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelSpec {
    Gpd(GpdParams),
    Frechet { gamma: f64 },
    Burr { lambda: f64, tau: f64 },
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::InvalidArgument(format!(
            "{name} must be a positive finite number, got {v}"
        )))
    }
}

impl ModelSpec {
    pub fn gpd(gamma: f64, sigma: f64) -> Result<Self> {
        Ok(ModelSpec::Gpd(GpdParams::new(gamma, sigma)?))
    }

    pub fn frechet(gamma: f64) -> Result<Self> {
        Ok(ModelSpec::Frechet {
            gamma: positive("Frechet gamma", gamma)?,
        })
    }

    pub fn burr(lambda: f64, tau: f64) -> Result<Self> {
        Ok(ModelSpec::Burr {
            lambda: positive("Burr lambda", lambda)?,
            tau: positive("Burr tau", tau)?,
        })
    }

    pub fn tail_index(&self) -> f64 {
        match *self {
            ModelSpec::Gpd(p) => p.gamma,
            ModelSpec::Frechet { gamma } => gamma,
            ModelSpec::Burr { lambda, tau } => lambda / tau,
        }
    }

    pub fn family(&self) -> &'static str {
        match self {
            ModelSpec::Gpd(_) => "gpd",
            ModelSpec::Frechet { .. } => "frechet",
            ModelSpec::Burr { .. } => "burr",
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            ModelSpec::Gpd(p) => p.cdf(x),
            ModelSpec::Frechet { gamma } => {
                if x <= 0.0 {
                    0.0
                } else {
                    exp(-powf(x, -1.0 / gamma))
                }
            }
            ModelSpec::Burr { .. } => 1.0 - self.survival(x),
        }
    }

    /// `F̄(x) = 1 − F(x)`, computed without cancellation.
    pub fn survival(&self, x: f64) -> f64 {
        match *self {
            ModelSpec::Gpd(p) => p.survival(x),
            ModelSpec::Frechet { gamma } => {
                if x <= 0.0 {
                    1.0
                } else {
                    -exp_m1(-powf(x, -1.0 / gamma))
                }
            }
            ModelSpec::Burr { lambda, tau } => {
                if x <= 0.0 {
                    1.0
                } else {
                    exp(-ln_1p(powf(x, tau)) / lambda)
                }
            }
        }
    }

    pub fn quantile(&self, u: f64) -> f64 {
        match *self {
            ModelSpec::Gpd(p) => p.quantile(u),
            ModelSpec::Frechet { gamma } => powf(-ln(u), -gamma),
            ModelSpec::Burr { lambda, tau } => powf(exp_m1(-lambda * ln_1p(-u)), 1.0 / tau),
        }
    }

    /// Maps one uniform draw to one observation.
    ///
    /// Fréchet uses `(−ln u)^{−γ}`; Burr treats `u` as the survival level,
    /// `(u^{−λ} − 1)^{1/τ}`; GPD uses the quantile function.
    pub fn transform_uniform(&self, u: f64) -> f64 {
        match *self {
            ModelSpec::Gpd(p) => p.quantile(u),
            ModelSpec::Frechet { gamma } => powf(-ln(u), -gamma),
            ModelSpec::Burr { lambda, tau } => powf(exp_m1(-lambda * ln(u)), 1.0 / tau),
        }
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelSpec::Gpd(p) => write!(f, "gpd:{},{}", p.gamma, p.sigma),
            ModelSpec::Frechet { gamma } => write!(f, "frechet:{gamma}"),
            ModelSpec::Burr { lambda, tau } => write!(f, "burr:{lambda},{tau}"),
        }
    }
}

impl FromStr for ModelSpec {
    type Err = Error;

    /// `gpd:γ,σ` | `frechet:γ` | `burr:λ,τ`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || {
            Error::InvalidArgument(format!(
                "invalid model `{s}` (expected gpd:g,s | frechet:g | burr:l,t)"
            ))
        };
        let (family, rest) = s.trim().split_once(':').ok_or_else(bad)?;
        let params: Vec<f64> = rest
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<core::result::Result<_, _>>()
            .map_err(|_| bad())?;
        match (
            family.trim().to_ascii_lowercase().as_str(),
            params.as_slice(),
        ) {
            ("gpd", &[g, s]) => {
                ModelSpec::gpd(g, s).map_err(|e| Error::InvalidArgument(e.to_string()))
            }
            ("frechet", &[g]) => ModelSpec::frechet(g),
            ("burr", &[l, t]) => ModelSpec::burr(l, t),
            _ => Err(bad()),
        }
    }
}

/// `n` i.i.d. draws by inverse transform.
pub fn sample<R: RngCore + ?Sized>(spec: &ModelSpec, n: usize, rng: &mut R) -> Vec<f64> {
    (0..n)
        .map(|_| spec.transform_uniform(uniform_open01(rng)))
        .collect()
}

/// Excesses over the `(k+1)`-th largest observation.
#[derive(Debug, Clone, PartialEq)]
pub struct ExcessSample {
    pub threshold: f64,
    /// The `k` excesses, ascending, all strictly positive.
    pub excesses: Vec<f64>,
    pub n_total: usize,
}

impl ExcessSample {
    /// Wraps raw excesses (already relative to a threshold).
    pub fn from_excesses(mut excesses: Vec<f64>, threshold: f64, n_total: usize) -> Result<Self> {
        if excesses.len() < 5 {
            return Err(Error::InvalidArgument(format!(
                "need at least 5 excesses, got {}",
                excesses.len()
            )));
        }
        if excesses.len() > n_total {
            return Err(Error::InvalidArgument(
                "more excesses than observations".to_string(),
            ));
        }
        if let Some(bad) = excesses.iter().find(|y| !(**y > 0.0) || !y.is_finite()) {
            return Err(Error::EstimationFailure(format!(
                "excesses must be positive and finite, found {bad}"
            )));
        }
        excesses.sort_by(f64::total_cmp);
        Ok(ExcessSample {
            threshold,
            excesses,
            n_total,
        })
    }

    pub fn k(&self) -> usize {
        self.excesses.len()
    }
}

/// Sorts a copy of `data` in descending order (ties keep index order).
pub fn sorted_descending(data: &[f64]) -> Vec<f64> {
    let mut sorted = data.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    sorted
}

/// Threshold = `(k+1)`-th largest value; excesses of the `k` largest values.
pub fn extract_excesses(data: &[f64], k: usize) -> Result<ExcessSample> {
    let n = data.len();
    if k < 5 || k >= n {
        return Err(Error::InvalidArgument(format!(
            "k must satisfy 5 <= k < n (k={k}, n={n})"
        )));
    }
    if let Some((i, x)) = data.iter().enumerate().find(|(_, x)| !x.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "non-finite observation {x} at index {i}"
        )));
    }
    let sorted = sorted_descending(data);
    excesses_from_sorted(&sorted, k)
}

/// Same as [`extract_excesses`] for data already sorted in descending order.
pub fn excesses_from_sorted(sorted_desc: &[f64], k: usize) -> Result<ExcessSample> {
    let n = sorted_desc.len();
    if k < 5 || k >= n {
        return Err(Error::InvalidArgument(format!(
            "k must satisfy 5 <= k < n (k={k}, n={n})"
        )));
    }
    let threshold = sorted_desc[k];
    let mut excesses: Vec<f64> = sorted_desc[..k]
        .iter()
        .rev()
        .map(|x| x - threshold)
        .collect();
    if excesses[0] <= 0.0 {
        return Err(Error::EstimationFailure(format!(
            "tied observations at the threshold {threshold}: excesses would not be strictly positive"
        )));
    }
    excesses.shrink_to_fit();
    Ok(ExcessSample {
        threshold,
        excesses,
        n_total: n,
    })
}
