//! The empirical-likelihood engine.
//!
//! For estimating-function values `g₁..g_k ∈ ℝᵈ` the EL log-ratio is
//! `l = 2 Σ log(1 + λ·gᵢ)` where λ maximises the concave dual
//! `λ ↦ Σ log(1 + λ·gᵢ)`. The dual is solved by damped Newton started at
//! λ = 0, with step halving that keeps every `1 + λ·gᵢ ≥ 1/k` (all implied
//! weights `pᵢ ≤ 1`) and never lets the dual decrease.

use alloc::vec::Vec;

use crate::linalg::{spd_solve, Sym2};
use crate::math::{atan2, exp, ln, ln_1p, sqrt};
use crate::{check_r, Error, Result};

/// Maximum Newton iterations for the Lagrange-multiplier solve.
pub const MAX_NEWTON_ITER: usize = 50;
/// Convergence threshold on `‖(1/k) Σ gᵢ/(1 + λ·gᵢ)‖`.
pub const RESIDUAL_TOL: f64 = 1e-10;

/// Zhang's estimating function
/// `g(y, γ, σ) = (log(1 + γy/σ) − γ, (1 + γy/σ)^{r/γ} − 1/(1 − r))`.
#[inline]
pub fn g_vec(y: f64, gamma: f64, sigma: f64, r: f64) -> [f64; 2] {
    let l = ln_1p(gamma * y / sigma);
    [l - gamma, exp(r / gamma * l) - 1.0 / (1.0 - r)]
}

#[derive(Debug, Clone, PartialEq)]
pub struct ElSolution {
    pub lambda: Vec<f64>,
    /// `2 Σ log(1 + λ·gᵢ)`, non-negative.
    pub log_ratio: f64,
    /// `pᵢ = 1/(k(1 + λ·gᵢ))`.
    pub weights: Vec<f64>,
    pub converged: bool,
    pub residual_norm: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy)]
struct Dual<const D: usize> {
    lambda: [f64; D],
    value: f64,
    residual_norm: f64,
    iterations: usize,
}

#[inline]
fn dot<const D: usize>(a: &[f64; D], b: &[f64; D]) -> f64 {
    let mut s = 0.0;
    for i in 0..D {
        s += a[i] * b[i];
    }
    s
}

/// Dual value `Σ log(1 + λ·gᵢ)`, its gradient, and `Σ gᵢgᵢᵀ/(1 + λ·gᵢ)²`
/// (the negated Hessian). The value is `-∞` outside the domain.
pub fn dual_derivatives<const D: usize>(
    gs: &[[f64; D]],
    lambda: &[f64; D],
) -> (f64, [f64; D], [[f64; D]; D]) {
    let mut value = 0.0;
    let mut grad = [0.0; D];
    let mut hess = [[0.0; D]; D];
    for g in gs {
        let t = 1.0 + dot(lambda, g);
        if !(t > 0.0) {
            return (f64::NEG_INFINITY, grad, hess);
        }
        value += ln(t);
        let inv = 1.0 / t;
        for a in 0..D {
            let ga = g[a] * inv;
            grad[a] += ga;
            for b in 0..=a {
                hess[a][b] += ga * g[b] * inv;
            }
        }
    }
    for a in 0..D {
        for b in 0..a {
            hess[b][a] = hess[a][b];
        }
    }
    (value, grad, hess)
}

fn norm<const D: usize>(v: &[f64; D]) -> f64 {
    sqrt(dot(v, v))
}

/// Damped Newton on the dual. `Err(Infeasible)` when zero is not interior
/// to the convex hull of the `gᵢ`.
fn solve_dual<const D: usize>(gs: &[[f64; D]]) -> Result<Dual<D>> {
    let k = gs.len();
    if k < D + 1 {
        return Err(Error::InvalidArgument(alloc::format!(
            "EL needs at least {} points, got {k}",
            D + 1
        )));
    }
    if gs.iter().any(|g| g.iter().any(|x| !x.is_finite())) {
        return Err(Error::Numerical {
            what: "non-finite estimating-function value",
            iterations: 0,
            residual: f64::NAN,
        });
    }
    if bounding_box_excludes_origin(gs) {
        return Err(Error::Infeasible);
    }
    let kf = k as f64;
    let floor = 1.0 / kf;
    let mut lambda = [0.0; D];
    let (mut value, mut grad, mut hess) = dual_derivatives(gs, &lambda);
    let mut residual = norm(&grad) / kf;
    // Σpᵢ = 1 − λ·(grad/k): a vanishing gradient with Σpᵢ ≠ 1 means λ is
    // running off to infinity
    let done = |lambda: &[f64; D], grad: &[f64; D], residual: f64| {
        residual <= RESIDUAL_TOL && (dot(lambda, grad) / kf).abs() <= RESIDUAL_TOL
    };
    for iter in 0..MAX_NEWTON_ITER {
        if done(&lambda, &grad, residual) {
            return Ok(Dual {
                lambda,
                value,
                residual_norm: residual,
                iterations: iter,
            });
        }
        let Some(step) = spd_solve(&hess, &grad) else {
            break;
        };
        let mut s = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let mut trial = lambda;
            for a in 0..D {
                trial[a] += s * step[a];
            }
            let in_domain = gs.iter().all(|g| 1.0 + dot(&trial, g) >= floor);
            if in_domain {
                let (v, gr, h) = dual_derivatives(gs, &trial);
                if v >= value - 1e-12 * value.abs().max(1.0) {
                    lambda = trial;
                    value = v;
                    grad = gr;
                    hess = h;
                    accepted = true;
                    break;
                }
            }
            s *= 0.5;
        }
        if !accepted {
            break;
        }
        residual = norm(&grad) / kf;
    }
    if done(&lambda, &grad, residual) {
        return Ok(Dual {
            lambda,
            value,
            residual_norm: residual,
            iterations: MAX_NEWTON_ITER,
        });
    }
    if !origin_interior(gs) {
        return Err(Error::Infeasible);
    }
    Err(Error::Numerical {
        what: "EL Lagrange multiplier did not converge",
        iterations: MAX_NEWTON_ITER,
        residual,
    })
}

fn bounding_box_excludes_origin<const D: usize>(gs: &[[f64; D]]) -> bool {
    (0..D).any(|a| gs.iter().all(|g| g[a] >= 0.0) || gs.iter().all(|g| g[a] <= 0.0))
}

/// Whether the origin lies strictly inside the convex hull of `gs` (d ≤ 2).
pub fn origin_interior<const D: usize>(gs: &[[f64; D]]) -> bool {
    match D {
        1 => {
            let lo = gs.iter().map(|g| g[0]).fold(f64::INFINITY, f64::min);
            let hi = gs.iter().map(|g| g[0]).fold(f64::NEG_INFINITY, f64::max);
            lo < 0.0 && hi > 0.0
        }
        2 => {
            // interior iff the largest angular gap between points is < π
            let mut angles: Vec<f64> = gs
                .iter()
                .filter(|g| g[0] != 0.0 || g[1] != 0.0)
                .map(|g| atan2(g[1], g[0]))
                .collect();
            if angles.len() < 3 {
                return false;
            }
            angles.sort_by(f64::total_cmp);
            let mut max_gap = angles[0] + 2.0 * core::f64::consts::PI - angles[angles.len() - 1];
            for w in angles.windows(2) {
                max_gap = max_gap.max(w[1] - w[0]);
            }
            max_gap < core::f64::consts::PI
        }
        _ => unimplemented!("origin_interior supports d <= 2"),
    }
}

/// Solves the Lagrange system for the weights of the EL problem
/// `max Π pᵢ  s.t.  Σ pᵢ gᵢ = 0, Σ pᵢ = 1`.
pub fn solve_lambda<const D: usize>(gs: &[[f64; D]]) -> Result<ElSolution> {
    let dual = solve_dual(gs)?;
    let kf = gs.len() as f64;
    let weights = gs
        .iter()
        .map(|g| 1.0 / (kf * (1.0 + dot(&dual.lambda, g))))
        .collect();
    Ok(ElSolution {
        lambda: dual.lambda.to_vec(),
        log_ratio: (2.0 * dual.value).max(0.0),
        weights,
        converged: true,
        residual_norm: dual.residual_norm,
        iterations: dual.iterations,
    })
}

/// EL log-ratio for a univariate set of estimating-function values
/// (the ELP mean problem). `+∞` when zero is outside their range.
pub fn el_ratio_1d(gs: &[[f64; 1]]) -> Result<f64> {
    match solve_dual(gs) {
        Ok(d) => Ok((2.0 * d.value).max(0.0)),
        Err(Error::Infeasible) => Ok(f64::INFINITY),
        Err(e) => Err(e),
    }
}

fn check_point(gamma: f64, sigma: f64, r: f64) -> Result<()> {
    check_r(r)?;
    if !(gamma > 0.0) || !gamma.is_finite() || !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::Domain(alloc::format!(
            "EL needs gamma > 0 and sigma > 0 (gamma={gamma}, sigma={sigma})"
        )));
    }
    Ok(())
}

pub fn g_values(excesses: &[f64], gamma: f64, sigma: f64, r: f64) -> Vec<[f64; 2]> {
    excesses
        .iter()
        .map(|&y| g_vec(y, gamma, sigma, r))
        .collect()
}

/// Full EL solution at (γ, σ), including weights.
pub fn el_solution(excesses: &[f64], gamma: f64, sigma: f64, r: f64) -> Result<ElSolution> {
    check_point(gamma, sigma, r)?;
    solve_lambda(&g_values(excesses, gamma, sigma, r))
}

/// `l(γ, σ)`; `+∞` when (γ, σ) is infeasible.
pub fn el_ratio(excesses: &[f64], gamma: f64, sigma: f64, r: f64) -> Result<f64> {
    check_point(gamma, sigma, r)?;
    match solve_dual(&g_values(excesses, gamma, sigma, r)) {
        Ok(d) => Ok((2.0 * d.value).max(0.0)),
        Err(Error::Infeasible) => Ok(f64::INFINITY),
        Err(e) => Err(e),
    }
}

/// Population moments of `g` at the truth, for `Z ~ GPD(γ, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentOracles {
    /// `E ∂g/∂σ` at σ = 1.
    pub a: [f64; 2],
    /// `E g gᵀ`.
    pub b: Sym2,
}

pub fn moment_oracles(gamma: f64, r: f64) -> Result<MomentOracles> {
    check_point(gamma, 1.0, r)?;
    let omr = 1.0 - r;
    let b = Sym2::new(
        gamma * gamma,
        gamma * r / (omr * omr),
        r * r / ((1.0 - 2.0 * r) * omr * omr),
    );
    let a = [-gamma / (gamma + 1.0), -r / ((omr + gamma) * omr)];
    Ok(MomentOracles { a, b })
}
