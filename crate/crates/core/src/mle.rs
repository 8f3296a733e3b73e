//! GPD maximum likelihood and its Wald covariance.

use alloc::format;

use crate::linalg::{spd_solve, Sym2};
use crate::math::{ln, ln_1p, sqrt};
use crate::models::GpdParams;
use crate::zhang::{zhang_fit, SigmaMatrix};
use crate::{Error, Result, DEFAULT_R};

pub const MAX_ITER: usize = 200;
/// Convergence threshold on the Euclidean norm of the log-likelihood
/// gradient with respect to (γ, log σ).
pub const GRAD_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MleFit {
    pub params: GpdParams,
    pub loglik: f64,
    pub converged: bool,
    pub iterations: usize,
    pub grad_norm: f64,
}

/// `Σᵢ [−log σ − (1/γ + 1) log(1 + γYᵢ/σ)]`.
pub fn gpd_loglik(params: GpdParams, excesses: &[f64]) -> Result<f64> {
    let (g, s) = (params.gamma, params.sigma);
    let mut total = 0.0;
    for &y in excesses {
        let z = g * y / s;
        if !(1.0 + z > 0.0) {
            return Err(Error::Domain(format!("1 + gamma*y/sigma <= 0 at y = {y}")));
        }
        total += -ln(s) - (1.0 / g + 1.0) * ln_1p(z);
    }
    Ok(total)
}

struct Derivs {
    value: f64,
    grad: [f64; 2],
    // negated Hessian
    neg_hess: [[f64; 2]; 2],
}

// Log-likelihood and derivatives in (γ, η = log σ); None outside the
// feasible set {γ > 0, 1 + γYᵢ/σ > 0}.
fn derivs(gamma: f64, eta: f64, ys: &[f64]) -> Option<Derivs> {
    if !(gamma > 0.0) || !eta.is_finite() {
        return None;
    }
    let sigma = libm::exp(eta);
    let (mut v, mut gg, mut ge, mut hgg, mut hge, mut hee) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    let ig = 1.0 / gamma;
    for &y in ys {
        let z = y / sigma;
        let w = 1.0 + gamma * z;
        if !(w > 0.0) {
            return None;
        }
        let l = ln_1p(gamma * z);
        let q = z / w;
        v += -eta - (ig + 1.0) * l;
        gg += l * ig * ig - (ig + 1.0) * q;
        ge += -1.0 + (1.0 + gamma) * q;
        hgg += -2.0 * l * ig * ig * ig + 2.0 * q * ig * ig + (ig + 1.0) * q * q;
        hge += q - (1.0 + gamma) * q * q;
        hee += -(1.0 + gamma) * q / w;
    }
    Some(Derivs {
        value: v,
        grad: [gg, ge],
        neg_hess: [[-hgg, -hge], [-hge, -hee]],
    })
}

/// Hosking–Wallis probability-weighted-moment estimate, used as a fallback
/// starting point.
pub fn pwm_start(excesses: &[f64]) -> Option<GpdParams> {
    let mut sorted = excesses.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let a0 = sorted.iter().sum::<f64>() / n;
    let a1 = sorted
        .iter()
        .enumerate()
        .map(|(i, y)| (1.0 - (i as f64 + 0.65) / n) * y)
        .sum::<f64>()
        / n;
    let denom = a0 - 2.0 * a1;
    if !(denom > 0.0) {
        return None;
    }
    let sigma = 2.0 * a0 * a1 / denom;
    let gamma = (2.0 - a0 / denom).max(0.05);
    GpdParams::new(gamma, sigma).ok()
}

/// Local maximiser of [`gpd_loglik`] by safeguarded Newton in (γ, log σ),
/// started at Zhang's estimate (PWM if that fails).
///
/// A non-convergent run is returned with `converged = false`; only the
/// absence of any feasible starting point is an error.
pub fn mle_fit(excesses: &[f64]) -> Result<MleFit> {
    if excesses.len() < 5 {
        return Err(Error::InvalidArgument(format!(
            "need at least 5 excesses, got {}",
            excesses.len()
        )));
    }
    let start = match zhang_fit(excesses, DEFAULT_R) {
        Ok(fit) => fit.params,
        Err(_) => pwm_start(excesses)
            .ok_or_else(|| Error::EstimationFailure("no feasible starting point for ML".into()))?,
    };
    let (mut gamma, mut eta) = (start.gamma, ln(start.sigma));
    let mut d = derivs(gamma, eta, excesses)
        .ok_or_else(|| Error::EstimationFailure("infeasible ML start".into()))?;
    let mut iterations = 0;
    let norm = |g: &[f64; 2]| sqrt(g[0] * g[0] + g[1] * g[1]);

    while iterations < MAX_ITER && norm(&d.grad) > GRAD_TOL {
        iterations += 1;
        let dir = newton_direction(&d);
        let mut step = 1.0;
        let mut moved = false;
        for _ in 0..60 {
            let (g1, e1) = (gamma + step * dir[0], eta + step * dir[1]);
            if let Some(d1) = derivs(g1, e1, excesses) {
                if d1.value >= d.value - 1e-12 * d.value.abs().max(1.0) {
                    gamma = g1;
                    eta = e1;
                    d = d1;
                    moved = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if !moved {
            break;
        }
    }
    let grad_norm = norm(&d.grad);
    Ok(MleFit {
        params: GpdParams {
            gamma,
            sigma: libm::exp(eta),
        },
        loglik: d.value,
        converged: grad_norm <= GRAD_TOL,
        iterations,
        grad_norm,
    })
}

// Newton direction when −H is positive definite, otherwise a Levenberg
// shift of −H until it is.
fn newton_direction(d: &Derivs) -> [f64; 2] {
    let h = &d.neg_hess;
    if let Some(step) = spd_solve(h, &d.grad) {
        return step;
    }
    let scale = h[0][0].abs().max(h[1][1].abs()).max(1e-12);
    let mut mu = 1e-6 * scale;
    loop {
        let shifted = [[h[0][0] + mu, h[0][1]], [h[1][0], h[1][1] + mu]];
        if let Some(step) = spd_solve(&shifted, &d.grad) {
            return step;
        }
        mu *= 10.0;
    }
}

/// Asymptotic covariance of `√k (γ̂ − γ, σ̂/σ − 1)` for the MLE:
/// `(1 + γ)·[[1 + γ, −1], [−1, 2]]`.
pub fn mle_cov(gamma: f64) -> Result<SigmaMatrix> {
    if !(gamma > -0.5) {
        return Err(Error::Domain(format!(
            "ML covariance needs gamma > -1/2, got {gamma}"
        )));
    }
    let s = 1.0 + gamma;
    Ok(Sym2::new(s * s, -s, 2.0 * s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{sample, ModelSpec};
    use crate::rng::stream;
    use std::vec::Vec;

    #[test]
    fn loglik_examples() {
        let unit = GpdParams::new(1.0, 1.0).unwrap();
        let ln2 = core::f64::consts::LN_2;
        assert!((gpd_loglik(unit, &[1.0]).unwrap() + 2.0 * ln2).abs() < 1e-15);
        assert!((gpd_loglik(unit, &[1.0, 3.0]).unwrap() + 2.0 * ln2 + 2.0 * ln(4.0)).abs() < 1e-14);
    }

    #[test]
    fn loglik_maximised_near_truth_on_grid() {
        let ys = sample(
            &ModelSpec::gpd(1.0, 1.0).unwrap(),
            10_000,
            &mut stream(21, 0),
        );
        // grid-refinement oracle
        let (mut best, mut c, mut h) = (f64::NEG_INFINITY, (1.0, 1.0), 0.5);
        for _ in 0..6 {
            let centre = c;
            for i in -10..=10 {
                for j in -10..=10 {
                    let p = GpdParams::new(
                        centre.0 + i as f64 * h / 10.0,
                        centre.1 + j as f64 * h / 10.0,
                    )
                    .unwrap();
                    let v = gpd_loglik(p, &ys).unwrap();
                    if v > best {
                        best = v;
                        c = (p.gamma, p.sigma);
                    }
                }
            }
            h /= 5.0;
        }
        assert!((c.0 - 1.0).abs() < 0.1 && (c.1 - 1.0).abs() < 0.1, "{c:?}");
        let fit = mle_fit(&ys).unwrap();
        assert!(fit.converged);
        assert!((fit.params.gamma - c.0).abs() < 1e-3 && (fit.params.sigma - c.1).abs() < 1e-3);
        assert!(fit.loglik >= best - 1e-9);
    }

    #[test]
    fn quantile_grid_data() {
        let p = GpdParams::new(1.0, 1.0).unwrap();
        let ys: Vec<f64> = (1..=500).map(|i| p.quantile(i as f64 / 501.0)).collect();
        let fit = mle_fit(&ys).unwrap();
        assert!(fit.converged);
        assert!(
            (fit.params.gamma - 1.0).abs() < 0.05 && (fit.params.sigma - 1.0).abs() < 0.05,
            "{fit:?}"
        );
    }

    #[test]
    fn scale_equivariance_and_dominance() {
        let data = sample(&ModelSpec::burr(1.0, 1.0).unwrap(), 1000, &mut stream(2, 9));
        let ex = crate::models::extract_excesses(&data, 200)
            .unwrap()
            .excesses;
        let fit = mle_fit(&ex).unwrap();
        assert!(fit.converged);
        let scaled: Vec<f64> = ex.iter().map(|y| 4.0 * y).collect();
        let f2 = mle_fit(&scaled).unwrap();
        assert!((f2.params.gamma - fit.params.gamma).abs() < 1e-7);
        assert!((f2.params.sigma / (4.0 * fit.params.sigma) - 1.0).abs() < 1e-7);
        let z = zhang_fit(&ex, DEFAULT_R).unwrap();
        assert!(fit.loglik >= gpd_loglik(z.params, &ex).unwrap());
    }

    #[test]
    fn gpd_quarter_sample() {
        let ys = sample(
            &ModelSpec::gpd(0.25, 1.0).unwrap(),
            4000,
            &mut stream(13, 0),
        );
        let fit = mle_fit(&ys).unwrap();
        assert!(fit.converged);
        let sd = 1.25;
        assert!((fit.params.gamma - 0.25).abs() < 5.0 * sd / libm::sqrt(4000.0));
    }

    #[test]
    fn covariance_substitution() {
        assert_eq!(mle_cov(1.0).unwrap(), Sym2::new(4.0, -2.0, 4.0));
        assert_eq!(mle_cov(0.0).unwrap(), Sym2::new(1.0, -1.0, 2.0));
        for g in [-0.49, 0.0, 0.3, 5.0] {
            let c = mle_cov(g).unwrap();
            let det = (1.0 + g) * (1.0 + g) * (2.0 * (1.0 + g) - 1.0);
            assert!((c.det() - det).abs() < 1e-12 * det.abs().max(1.0));
            assert!(c.is_positive_definite());
        }
        assert!(mle_cov(-0.5).is_err());
    }
}
