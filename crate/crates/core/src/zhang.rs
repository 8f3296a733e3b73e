//! Zhang's estimating equations for (γ, σ), the root solve in `b = −γ/σ`,
//! the asymptotic covariance Σ(γ, r) and the Wald statistic.
//!
//! Sign convention: `ḡ(b) = (1/k) Σ log(1 − b·Yᵢ)`, which is positive for
//! `b < 0`, and γ̂ = ḡ(b*). This is the convention under which the log
//! equation reads `E log(1 + γY/σ) = γ`.

use alloc::format;

use crate::linalg::Sym2;
use crate::math::{exp, ln_1p};
use crate::models::GpdParams;
use crate::optim::{brent_root, RootOptions};
use crate::{check_r, Error, Result};

/// Covariance of `√k (γ̂ − γ, σ̂/σ − 1)`.
pub type SigmaMatrix = Sym2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZhangFit {
    pub params: GpdParams,
    /// `b = −γ̂/σ̂`.
    pub b: f64,
    pub r: f64,
    /// Sample means of the two estimating functions at the solution.
    pub residuals: [f64; 2],
}

const MAX_BRACKET_STEPS: usize = 60;

fn check_excesses(excesses: &[f64]) -> Result<()> {
    if excesses.len() < 5 {
        return Err(Error::InvalidArgument(format!(
            "need at least 5 excesses, got {}",
            excesses.len()
        )));
    }
    if excesses.iter().any(|y| !(*y > 0.0) || !y.is_finite()) {
        return Err(Error::InvalidArgument(
            "excesses must be positive and finite".into(),
        ));
    }
    Ok(())
}

fn max_of(xs: &[f64]) -> f64 {
    xs.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

// Residual without domain checks; `b` must satisfy 1 − b·max(Y) > 0, b ≠ 0.
fn residual_unchecked(b: f64, excesses: &[f64], r: f64) -> f64 {
    let k = excesses.len() as f64;
    let gbar = excesses.iter().map(|&y| ln_1p(-b * y)).sum::<f64>() / k;
    let power = r / gbar;
    let moment = excesses
        .iter()
        .map(|&y| exp(power * ln_1p(-b * y)))
        .sum::<f64>()
        / k;
    moment - 1.0 / (1.0 - r)
}

/// `(1/k) Σ (1 − bYᵢ)^{r/ḡ(b)} − 1/(1 − r)`.
pub fn b_equation_residual(b: f64, excesses: &[f64], r: f64) -> Result<f64> {
    check_r(r)?;
    if excesses.is_empty() {
        return Err(Error::InvalidArgument("no excesses".into()));
    }
    let ymax = max_of(excesses);
    if b == 0.0 || !b.is_finite() || b * ymax >= 1.0 {
        return Err(Error::Domain(format!(
            "b must be non-zero with b < 1/max(Y) = {} (b = {b})",
            1.0 / ymax
        )));
    }
    Ok(residual_unchecked(b, excesses, r))
}

/// Root `b* < 0` of [`b_equation_residual`].
///
/// The bracket starts at `−1/mean(Y)` and is expanded geometrically towards
/// −∞ or towards 0⁻; the root is then polished by Brent's method down to the
/// resolution of `f64`.
pub fn solve_b(excesses: &[f64], r: f64) -> Result<f64> {
    check_r(r)?;
    check_excesses(excesses)?;
    let mean = excesses.iter().sum::<f64>() / excesses.len() as f64;
    let f = |b: f64| residual_unchecked(b, excesses, r);

    let b0 = -1.0 / mean;
    let f0 = f(b0);
    if f0 == 0.0 {
        return Ok(b0);
    }
    let (mut lo, mut hi, mut flo, mut fhi) = (b0, b0, f0, f0);
    let mut found = false;
    for _ in 0..MAX_BRACKET_STEPS {
        if f0 > 0.0 {
            // residual is negative far out at −∞: move left
            hi = lo;
            fhi = flo;
            lo *= 2.0;
            flo = f(lo);
            if flo < 0.0 {
                found = true;
                break;
            }
        } else {
            lo = hi;
            flo = fhi;
            hi *= 0.5;
            fhi = f(hi);
            if fhi > 0.0 {
                found = true;
                break;
            }
        }
    }
    if !found || !flo.is_finite() || !fhi.is_finite() {
        return Err(Error::EstimationFailure(
            "no sign change of the b-equation on (-inf, 0): tail index not positive or sample degenerate".into(),
        ));
    }
    let root = brent_root(
        f,
        lo,
        hi,
        flo,
        fhi,
        RootOptions {
            ftol: 0.0,
            xtol: 0.0,
            max_iter: 300,
        },
    );
    Ok(root.x)
}

/// Zhang's estimator: `γ̂ = ḡ(b*)`, `σ̂ = −γ̂/b*`.
pub fn zhang_fit(excesses: &[f64], r: f64) -> Result<ZhangFit> {
    let b = solve_b(excesses, r)?;
    let k = excesses.len() as f64;
    let gamma = excesses.iter().map(|&y| ln_1p(-b * y)).sum::<f64>() / k;
    let sigma = -gamma / b;
    let params =
        GpdParams::new(gamma, sigma).map_err(|e| Error::EstimationFailure(format!("{e}")))?;
    let (mut s1, mut s2) = (0.0, 0.0);
    for &y in excesses {
        let l = ln_1p(gamma * y / sigma);
        s1 += l;
        s2 += exp(r / gamma * l);
    }
    let residuals = [s1 / k - gamma, s2 / k - 1.0 / (1.0 - r)];
    Ok(ZhangFit {
        params,
        b,
        r,
        residuals,
    })
}

/// Asymptotic covariance Σ(γ, r) of `√k (γ̂ − γ, σ̂/σ − 1)`.
pub fn sigma_matrix(gamma: f64, r: f64) -> Result<SigmaMatrix> {
    check_r(r)?;
    if !(gamma > 0.0) {
        return Err(Error::Domain(format!(
            "sigma_matrix needs gamma > 0, got {gamma}"
        )));
    }
    let d = 1.0 - 2.0 * r;
    let a11 = (1.0 - r) * (1.0 + (2.0 * gamma * gamma + 2.0 * gamma + r) / d);
    let a12 = -1.0 - (r * r + gamma * gamma + gamma) / d;
    let a22 = 2.0 + ((r - gamma) * (r - gamma) + 2.0 * gamma) / d;
    Ok(Sym2::new(a11, a12, a22))
}

/// `k·vᵀ cov⁻¹ v` with `v = (γ̂ − γ₀, σ̂/σ₀ − 1)`.
pub fn wald_stat(
    estimate: GpdParams,
    hypothesized: GpdParams,
    k: usize,
    cov: &SigmaMatrix,
) -> Result<f64> {
    let inv = cov.inverse()?;
    let v = [
        estimate.gamma - hypothesized.gamma,
        estimate.sigma / hypothesized.sigma - 1.0,
    ];
    Ok(k as f64 * inv.quad_form(v))
}
