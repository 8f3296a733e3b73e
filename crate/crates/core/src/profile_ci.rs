//! Confidence intervals for the tail index γ.
//!
//! - ELW: profile empirical likelihood, σ profiled out of `l(γ, σ)`.
//! - ELP: univariate EL for the mean of the Hill log-spacings with an
//!   exponential (Monte-Carlo) calibration.
//! - Zhang: normal approximation `γ̂ ± z·√(Σ₁₁(γ̂, r)/k)`.

use core::cell::Cell;

use alloc::format;
use alloc::vec::Vec;

use crate::el_core::{el_ratio, el_ratio_1d};
use crate::math::{ceil, exp, ln, sqrt};
use crate::models::sorted_descending;
use crate::optim::{brent_min, brent_root, RootOptions};
use crate::rng::{derive_seed, standard_exponential, stream};
use crate::statfun::{chi2_quantile, fisher_critical, normal_quantile, Probability};
use crate::zhang::{sigma_matrix, zhang_fit, ZhangFit};
use crate::{Calibration, Error, Result};

/// Tolerance on `|statistic(endpoint) − critical value|`.
pub const ENDPOINT_TOL: f64 = 1e-6;
/// The σ bracket may grow up to 2⁸ times either way from its centre.
const MAX_LOG_SPAN: f64 = 8.0 * core::f64::consts::LN_2;
const PROFILE_XTOL: f64 = 1e-9;
/// Coarse log-σ scan points on each side of the centre.
const SCAN_STEPS: i32 = 16;
/// Stream tag for the ELP calibration draws.
pub const ELP_STREAM_TAG: u64 = 0x454C_505F_4341_4C42;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CiMethod {
    Elw,
    Elp,
    ZhangWald,
}

impl CiMethod {
    pub fn name(self) -> &'static str {
        match self {
            CiMethod::Elw => "elw",
            CiMethod::Elp => "elp",
            CiMethod::ZhangWald => "zhang",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfidenceInterval {
    pub lo: f64,
    pub hi: f64,
    pub level: Probability,
    pub method: CiMethod,
    pub critical_value: f64,
    /// Point estimate the interval was grown from (γ̂ or Hill).
    pub estimate: f64,
    /// Both endpoints located to [`ENDPOINT_TOL`].
    pub converged: bool,
    /// No crossing of the critical value was found on that side.
    pub lo_open: bool,
    pub hi_open: bool,
}

impl ConfidenceInterval {
    pub fn contains(&self, gamma: f64) -> bool {
        (self.lo_open || gamma >= self.lo) && (self.hi_open || gamma <= self.hi)
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn is_open(&self) -> bool {
        self.lo_open || self.hi_open
    }
}

/// Minimum of `σ ↦ l(γ, σ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfilePoint {
    pub sigma: f64,
    pub l: f64,
    /// Both ends of the final bracket are strictly above the minimum.
    pub interior: bool,
    pub evaluations: usize,
}

// EL ratio in log σ; infeasible points and solver breakdowns (which only
// occur against the hull boundary) count as +∞.
fn log_sigma_objective<'a>(
    excesses: &'a [f64],
    gamma: f64,
    r: f64,
    evals: &'a Cell<usize>,
) -> impl FnMut(f64) -> f64 + 'a {
    move |x: f64| {
        evals.set(evals.get() + 1);
        el_ratio(excesses, gamma, exp(x), r).unwrap_or(f64::INFINITY)
    }
}

/// Profiles σ out of `l(γ, σ)`, searching in log σ around `sigma_center`.
pub fn profile_sigma_from(
    excesses: &[f64],
    gamma: f64,
    r: f64,
    sigma_center: f64,
) -> Result<ProfilePoint> {
    if !(gamma > 0.0) || !(sigma_center > 0.0) {
        return Err(Error::Domain(format!(
            "profile needs gamma > 0 and a positive centre (gamma={gamma})"
        )));
    }
    crate::check_r(r)?;
    let evals = Cell::new(0usize);
    let centre = ln(sigma_center);
    let mut f = log_sigma_objective(excesses, gamma, r, &evals);
    // The profile in σ can have several local minima for small k, so the
    // whole span is scanned coarsely before polishing the best basin.
    let step = MAX_LOG_SPAN / SCAN_STEPS as f64;
    let scan: Vec<(f64, f64)> = (-SCAN_STEPS..=SCAN_STEPS)
        .map(|j| {
            let x = centre + j as f64 * step;
            (x, f(x))
        })
        .collect();
    let best = scan
        .iter()
        .enumerate()
        .filter(|(_, (_, v))| v.is_finite())
        .min_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .map(|(i, _)| i);
    let (x, fx, a, fa, b, fb) = match best {
        Some(i) => {
            let (x, fx) = scan[i];
            let (a, fa) = if i > 0 { scan[i - 1] } else { (x, fx) };
            let (b, fb) = scan.get(i + 1).copied().unwrap_or((x, fx));
            (x, fx, a, fa, b, fb)
        }
        None => {
            // feasible set narrower than the scan step
            let Some((x0, f0)) = first_finite(&mut f, centre) else {
                return Err(Error::ProfileFailure { gamma });
            };
            bracket_minimum(&mut f, centre, x0, f0)
        }
    };
    let interior = fa > fx && fb > fx;
    let m = brent_min(&mut f, a, b, x, fx, PROFILE_XTOL, 200);
    Ok(ProfilePoint {
        sigma: exp(m.x),
        l: m.fx,
        interior,
        evaluations: evals.get(),
    })
}

/// Finite value nearest to the centre, scanning outward with doubling steps.
fn first_finite<F: FnMut(f64) -> f64>(f: &mut F, centre: f64) -> Option<(f64, f64)> {
    let f0 = f(centre);
    if f0.is_finite() {
        return Some((centre, f0));
    }
    let mut step = 0.05;
    while step <= MAX_LOG_SPAN {
        for x in [centre - step, centre + step] {
            let v = f(x);
            if v.is_finite() {
                return Some((x, v));
            }
        }
        step *= 2.0;
    }
    None
}

/// Walks downhill from `x0` with doubling steps until the function turns up
/// or the span limit is reached. Returns `(x, f(x), a, f(a), b, f(b))` with
/// `a < x < b`.
fn bracket_minimum<F: FnMut(f64) -> f64>(
    f: &mut F,
    centre: f64,
    x0: f64,
    f0: f64,
) -> (f64, f64, f64, f64, f64, f64) {
    let lo_lim = centre - MAX_LOG_SPAN;
    let hi_lim = centre + MAX_LOG_SPAN;
    let h = 0.05;
    let (xl, xr) = ((x0 - h).max(lo_lim), (x0 + h).min(hi_lim));
    let (fl, fr) = (f(xl), f(xr));
    if fl >= f0 && fr >= f0 {
        return (x0, f0, xl, fl, xr, fr);
    }
    // walk in the descending direction
    let dir = if fl < fr { -1.0 } else { 1.0 };
    let (mut prev, mut fprev) = (x0, f0);
    let (mut cur, mut fcur) = if dir < 0.0 { (xl, fl) } else { (xr, fr) };
    let mut step = h;
    loop {
        step *= 2.0;
        let next = (cur + dir * step).clamp(lo_lim, hi_lim);
        if next == cur {
            // hit the span limit while still descending
            let (a, fa, b, fb) = if dir < 0.0 {
                (cur, fcur, prev, fprev)
            } else {
                (prev, fprev, cur, fcur)
            };
            return (cur, fcur, a, fa, b, fb);
        }
        let fnext = f(next);
        if fnext >= fcur {
            let (a, fa, b, fb) = if dir < 0.0 {
                (next, fnext, prev, fprev)
            } else {
                (prev, fprev, next, fnext)
            };
            return (cur, fcur, a, fa, b, fb);
        }
        prev = cur;
        fprev = fcur;
        cur = next;
        fcur = fnext;
    }
}

/// Profile at γ using Zhang's fit to centre the σ search: `σ̂·γ/γ̂`, which
/// keeps `b = −γ/σ` at its estimate.
pub fn profile_sigma(excesses: &[f64], gamma: f64, r: f64) -> Result<ProfilePoint> {
    let fit = zhang_fit(excesses, r)?;
    profile_sigma_with_fit(excesses, gamma, r, &fit)
}

pub fn profile_sigma_with_fit(
    excesses: &[f64],
    gamma: f64,
    r: f64,
    fit: &ZhangFit,
) -> Result<ProfilePoint> {
    profile_sigma_from(
        excesses,
        gamma,
        r,
        fit.params.sigma * gamma / fit.params.gamma,
    )
}

/// Critical value for a `dim`-dimensional EL statistic.
pub fn el_critical_value(
    k: usize,
    level: Probability,
    dim: u32,
    calibration: Calibration,
) -> Result<f64> {
    match calibration {
        Calibration::Chi2 => chi2_quantile(level, dim),
        Calibration::Fisher => fisher_critical(k, level, dim),
    }
}

/// Grows a bracket away from `start` (where `h < 0`) through the candidate
/// sequence and polishes the crossing. Returns `(endpoint, open, converged)`.
fn find_crossing<H, C>(h: &mut H, start: f64, mut candidates: C) -> (f64, bool, bool)
where
    H: FnMut(f64) -> f64,
    C: Iterator<Item = f64>,
{
    let (mut inner, mut h_inner) = (start, h(start));
    for x in &mut candidates {
        let hx = h(x);
        if hx >= 0.0 {
            let root = brent_root(
                &mut *h,
                inner,
                x,
                h_inner,
                hx,
                RootOptions {
                    ftol: ENDPOINT_TOL,
                    xtol: 0.0,
                    max_iter: 200,
                },
            );
            let ok = root.fx.abs() <= ENDPOINT_TOL;
            return (root.x, false, ok);
        }
        inner = x;
        h_inner = hx;
    }
    (inner, true, false)
}

const MAX_EXPANSIONS: usize = 40;

fn upward(start: f64, delta: f64) -> impl Iterator<Item = f64> {
    (0..MAX_EXPANSIONS).map(move |j| start + delta * (1u64 << j) as f64)
}

// Subtracts doubling steps while positive, then halves towards zero.
fn downward(start: f64, delta: f64) -> impl Iterator<Item = f64> {
    let mut last = start;
    let mut j = 0u32;
    core::iter::from_fn(move || {
        if j as usize >= MAX_EXPANSIONS + 20 {
            return None;
        }
        let cand = start - delta * (1u64 << j.min(62)) as f64;
        j += 1;
        last = if cand > 0.5 * last { cand } else { 0.5 * last };
        Some(last)
    })
}

/// ELW interval: `{γ : l(γ, σ̂_γ) ≤ c}` with `c` from χ²(1) or Fisher.
pub fn elw_ci(
    excesses: &[f64],
    r: f64,
    level: Probability,
    calibration: Calibration,
) -> Result<ConfidenceInterval> {
    let fit = zhang_fit(excesses, r)?;
    let k = excesses.len();
    let c = el_critical_value(k, level, 1, calibration)?;
    let g_hat = fit.params.gamma;
    let mut h = |g: f64| -> f64 {
        if !(g > 0.0) {
            return f64::INFINITY;
        }
        match profile_sigma_with_fit(excesses, g, r, &fit) {
            Ok(p) => p.l - c,
            Err(_) => f64::INFINITY,
        }
    };
    let sd = sqrt(sigma_matrix(g_hat, r)?.a11 / k as f64);
    let delta = (0.5 * sd).max(1e-3 * g_hat);
    let (hi, hi_open, hi_ok) = find_crossing(&mut h, g_hat, upward(g_hat, delta));
    let (lo, lo_open, lo_ok) = find_crossing(&mut h, g_hat, downward(g_hat, delta));
    Ok(ConfidenceInterval {
        lo,
        hi,
        level,
        method: CiMethod::Elw,
        critical_value: c,
        estimate: g_hat,
        converged: lo_ok && hi_ok,
        lo_open,
        hi_open,
    })
}

/// Log-spacings `log(X_(n−i+1)/u)`, i = 1..k, with `u` the (k+1)-th largest.
pub fn hill_log_spacings(data: &[f64], k: usize) -> Result<Vec<f64>> {
    let n = data.len();
    if k < 1 || k >= n {
        return Err(Error::InvalidArgument(format!(
            "Hill needs 1 <= k < n (k={k}, n={n})"
        )));
    }
    let sorted = sorted_descending(data);
    let u = sorted[k];
    if !(u > 0.0) {
        return Err(Error::Domain(format!(
            "Hill threshold must be positive, got {u}"
        )));
    }
    Ok(sorted[..k].iter().map(|x| ln(x / u)).collect())
}

pub fn hill_estimator(data: &[f64], k: usize) -> Result<f64> {
    let z = hill_log_spacings(data, k)?;
    Ok(z.iter().sum::<f64>() / k as f64)
}

/// Univariate EL ratio for the mean of `z` at `gamma`.
pub fn elp_ratio(z: &[f64], gamma: f64) -> Result<f64> {
    let gs: Vec<[f64; 1]> = z.iter().map(|&v| [v - gamma]).collect();
    el_ratio_1d(&gs)
}

/// One draw of the ELP null statistic: the EL ratio at the true mean of `k`
/// standard exponentials.
pub fn elp_null_statistic<R: rand_core::RngCore + ?Sized>(k: usize, rng: &mut R) -> Result<f64> {
    let z: Vec<[f64; 1]> = (0..k).map(|_| [standard_exponential(rng) - 1.0]).collect();
    el_ratio_1d(&z)
}

/// `⌈p·n⌉`-th smallest value (inverse of the empirical CDF).
pub fn empirical_quantile(values: &mut [f64], p: Probability) -> f64 {
    values.sort_by(f64::total_cmp);
    let idx = (ceil(p.get() * values.len() as f64) as usize).clamp(1, values.len()) - 1;
    values[idx]
}

/// Exponential calibration: the `level` quantile of [`elp_null_statistic`]
/// over `reps` draws. Draw `j` uses stream `j` of the family keyed by
/// `derive_seed(seed, ELP_STREAM_TAG)`.
pub fn elp_critical_value(k: usize, level: Probability, reps: usize, seed: u64) -> Result<f64> {
    if reps == 0 {
        return Err(Error::Calibration(
            "calibration needs at least one replication".into(),
        ));
    }
    let family = derive_seed(seed, ELP_STREAM_TAG);
    let mut stats = (0..reps)
        .map(|j| elp_null_statistic(k, &mut stream(family, j as u64)))
        .collect::<Result<Vec<f64>>>()?;
    Ok(empirical_quantile(&mut stats, level))
}

/// ELP interval with a given critical value.
pub fn elp_ci_with_critical(
    data: &[f64],
    k: usize,
    level: Probability,
    critical_value: f64,
) -> Result<ConfidenceInterval> {
    if k < 10 {
        return Err(Error::InvalidArgument(format!(
            "ELP needs k >= 10, got {k}"
        )));
    }
    let z = hill_log_spacings(data, k)?;
    let hill = z.iter().sum::<f64>() / k as f64;
    let zmin = z.iter().copied().fold(f64::INFINITY, f64::min);
    let zmax = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut h = |g: f64| elp_ratio(&z, g).unwrap_or(f64::INFINITY) - critical_value;
    let h0 = h(hill);
    let opts = RootOptions {
        ftol: ENDPOINT_TOL,
        xtol: 0.0,
        max_iter: 300,
    };
    let lo = brent_root(&mut h, zmin, hill, f64::INFINITY, h0, opts);
    let hi = brent_root(&mut h, hill, zmax, h0, f64::INFINITY, opts);
    Ok(ConfidenceInterval {
        lo: lo.x,
        hi: hi.x,
        level,
        method: CiMethod::Elp,
        critical_value,
        estimate: hill,
        converged: lo.fx.abs() <= ENDPOINT_TOL && hi.fx.abs() <= ENDPOINT_TOL,
        lo_open: false,
        hi_open: false,
    })
}

/// ELP interval calibrated on `calib_reps` exponential samples.
pub fn elp_ci(
    data: &[f64],
    k: usize,
    level: Probability,
    calib_reps: usize,
    seed: u64,
) -> Result<ConfidenceInterval> {
    let c = elp_critical_value(k, level, calib_reps, seed)?;
    elp_ci_with_critical(data, k, level, c)
}

/// `γ̂ ± z_{(1+level)/2}·√(Σ₁₁(γ̂, r)/k)`. The lower end is not clipped at 0.
pub fn zhang_wald_ci(excesses: &[f64], r: f64, level: Probability) -> Result<ConfidenceInterval> {
    let fit = zhang_fit(excesses, r)?;
    let z = normal_quantile(Probability::new(0.5 * (1.0 + level.get()))?);
    let half = z * sqrt(sigma_matrix(fit.params.gamma, r)?.a11 / excesses.len() as f64);
    Ok(ConfidenceInterval {
        lo: fit.params.gamma - half,
        hi: fit.params.gamma + half,
        level,
        method: CiMethod::ZhangWald,
        critical_value: z,
        estimate: fit.params.gamma,
        converged: true,
        lo_open: false,
        hi_open: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{extract_excesses, sample, ModelSpec};
    use std::vec;

    fn p(v: f64) -> Probability {
        Probability::new(v).unwrap()
    }

    fn burr_excesses(seed: u64, k: usize) -> Vec<f64> {
        let data = sample(
            &ModelSpec::burr(1.0, 1.0).unwrap(),
            1000,
            &mut stream(seed, 0),
        );
        extract_excesses(&data, k).unwrap().excesses
    }

    #[test]
    fn profile_at_mele_is_zero() {
        let ys = burr_excesses(1, 200);
        let fit = zhang_fit(&ys, -0.5).unwrap();
        let prof = profile_sigma(&ys, fit.params.gamma, -0.5).unwrap();
        assert!(prof.l <= 1e-8, "{prof:?}");
        assert!((prof.sigma / fit.params.sigma - 1.0).abs() < 1e-4);
        assert!(prof.interior);
    }

    #[test]
    fn profile_matches_dense_grid() {
        let ys = [0.1, 0.5, 1.0, 2.0, 5.0, 20.0, 100.0];
        for gamma in [1.0, 2.0] {
            let prof = profile_sigma(&ys, gamma, -0.5).unwrap();
            // dense log grid over σ ∈ [0.01, 50]
            let f = |s: f64| el_ratio(&ys, gamma, s, -0.5).unwrap_or(f64::INFINITY);
            let n = 200_000;
            let (mut best_s, mut best) = (0.0, f64::INFINITY);
            for i in 0..=n {
                let s = libm::exp(
                    libm::log(0.01) + (libm::log(50.0) - libm::log(0.01)) * i as f64 / n as f64,
                );
                let v = f(s);
                if v < best {
                    best = v;
                    best_s = s;
                }
            }
            assert!(
                (prof.sigma - best_s).abs() < 1e-4 * best_s.max(1.0),
                "{} vs {best_s}",
                prof.sigma
            );
            assert!(prof.l <= best + 1e-10);
            assert!(prof.interior);
        }
    }

    #[test]
    fn profile_finds_global_basin() {
        // five large Fréchet(1) excesses; at γ ≈ 0.347 the σ-profile has a
        // local minimum near 23 and the global one near 300
        let ys = [
            6.543934362320471,
            22.461177907440913,
            267.47769526178047,
            345.9894868408079,
            1687.2807008986058,
        ];
        let fit = zhang_fit(&ys, -0.5).unwrap();
        let gamma = 0.347;
        let prof = profile_sigma_with_fit(&ys, gamma, -0.5, &fit).unwrap();
        let mut best = f64::INFINITY;
        for i in 0..40_000 {
            let s = libm::exp(libm::log(fit.params.sigma) - 8.0 + 16.0 * i as f64 / 40_000.0);
            best = best.min(el_ratio(&ys, gamma, s, -0.5).unwrap_or(f64::INFINITY));
        }
        assert!(prof.l <= best + 1e-9, "{prof:?} vs {best}");
        assert!(prof.sigma > 100.0);
    }

    #[test]
    fn elw_contains_estimate_and_nests() {
        let ys = burr_excesses(2, 200);
        let fit = zhang_fit(&ys, -0.5).unwrap();
        let ci95 = elw_ci(&ys, -0.5, p(0.95), Calibration::Chi2).unwrap();
        let ci99 = elw_ci(&ys, -0.5, p(0.99), Calibration::Chi2).unwrap();
        let fisher = elw_ci(&ys, -0.5, p(0.95), Calibration::Fisher).unwrap();
        assert!(ci95.converged && ci99.converged && fisher.converged);
        assert!(ci95.lo < fit.params.gamma && fit.params.gamma < ci95.hi);
        assert!(ci99.lo < ci95.lo && ci95.hi < ci99.hi);
        assert!(fisher.lo < ci95.lo && ci95.hi < fisher.hi);
        assert!(ci95.lo > 0.0);
        for end in [ci95.lo, ci95.hi] {
            let l = profile_sigma_with_fit(&ys, end, -0.5, &fit).unwrap().l;
            assert!((l - ci95.critical_value).abs() <= ENDPOINT_TOL);
        }
    }

    #[test]
    fn profile_is_unimodal_along_gamma() {
        let ys = burr_excesses(3, 150);
        let fit = zhang_fit(&ys, -0.5).unwrap();
        let g = fit.params.gamma;
        let vals: Vec<f64> = (0..41)
            .map(|i| g * (0.5 + i as f64 * 0.025))
            .map(|gi| {
                profile_sigma_with_fit(&ys, gi, -0.5, &fit)
                    .map(|pp| pp.l)
                    .unwrap_or(f64::INFINITY)
            })
            .collect();
        let argmin = vals
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        assert!(vals[..=argmin].windows(2).all(|w| w[0] >= w[1]));
        assert!(vals[argmin..].windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn hill_examples() {
        let e = core::f64::consts::E;
        let data = [e, e * e, e * e * e, 1.0];
        assert!((hill_estimator(&data, 2).unwrap() - 1.5).abs() < 1e-15);
        // exact Pareto grid X = (i/(n+1))^{−γ}
        let n = 10_000;
        let xs: Vec<f64> = (1..=n)
            .map(|i| libm::pow(i as f64 / (n + 1) as f64, -0.5))
            .collect();
        let h = hill_estimator(&xs, 500).unwrap();
        assert!((h - 0.5).abs() < 2.0 / 500.0, "{h}");
        let scaled: Vec<f64> = xs.iter().map(|x| 3.0 * x).collect();
        assert!((hill_estimator(&scaled, 500).unwrap() - h).abs() < 1e-12);
        assert!(matches!(
            hill_estimator(&[1.0, 0.0, -1.0], 2),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn elp_interval_properties() {
        let data = sample(&ModelSpec::frechet(1.0).unwrap(), 1000, &mut stream(4, 0));
        let c = elp_critical_value(200, p(0.95), 2000, 17).unwrap();
        let ci = elp_ci_with_critical(&data, 200, p(0.95), c).unwrap();
        assert!(ci.converged);
        assert!(ci.lo < ci.estimate && ci.estimate < ci.hi);
        for end in [ci.lo, ci.hi] {
            let z = hill_log_spacings(&data, 200).unwrap();
            assert!((elp_ratio(&z, end).unwrap() - c).abs() <= ENDPOINT_TOL);
        }
        let scaled: Vec<f64> = data.iter().map(|x| 7.5 * x).collect();
        let ci2 = elp_ci_with_critical(&scaled, 200, p(0.95), c).unwrap();
        assert!((ci2.lo - ci.lo).abs() < 1e-12 && (ci2.hi - ci.hi).abs() < 1e-12);
        assert!(elp_ci_with_critical(&data, 9, p(0.95), c).is_err());
    }

    #[test]
    fn elp_calibration_is_deterministic() {
        let a = elp_critical_value(50, p(0.95), 500, 1).unwrap();
        let b = elp_critical_value(50, p(0.95), 500, 1).unwrap();
        assert_eq!(a, b);
        assert!(a > 2.5 && a < 6.0, "{a}");
    }

    #[test]
    fn zhang_wald_width() {
        let ys = burr_excesses(5, 200);
        let ci = zhang_wald_ci(&ys, -0.5, p(0.95)).unwrap();
        let fit = zhang_fit(&ys, -0.5).unwrap();
        assert!(((ci.lo + ci.hi) / 2.0 - fit.params.gamma).abs() < 1e-12);
        let s11 = sigma_matrix(fit.params.gamma, -0.5).unwrap().a11;
        assert!((ci.width() - 2.0 * 1.959_963_984_540_054 * libm::sqrt(s11 / 200.0)).abs() < 1e-12);
        let narrow = zhang_wald_ci(&ys, -0.5, p(0.5)).unwrap();
        assert!(narrow.width() < ci.width());
    }

    #[test]
    fn zhang_wald_at_unit_gamma() {
        // Σ₁₁(1, −1/2) = 4.125
        let s11 = sigma_matrix(1.0, -0.5).unwrap().a11;
        let k = 400.0;
        let width = 2.0 * normal_quantile(p(0.975)) * libm::sqrt(s11 / k);
        assert!((width - 2.0 * 1.959_964 * libm::sqrt(4.125 / k)).abs() < 1e-6);
    }

    #[test]
    fn empirical_quantile_convention() {
        let mut v = vec![5.0, 1.0, 4.0, 2.0, 3.0];
        assert_eq!(empirical_quantile(&mut v, p(0.5)), 3.0);
        assert_eq!(empirical_quantile(&mut v, p(0.95)), 5.0);
        assert_eq!(empirical_quantile(&mut v, p(0.2)), 1.0);
    }
}
