//! Monte-Carlo coverage harness.
//!
//! Replication `j` draws its sample from stream `j` of the run seed, so the
//! per-replication outcomes do not depend on evaluation order. Records are a
//! fold over outcomes in replication order; callers may compute the outcomes
//! in parallel (see [`replicate`]) and fold them with [`fold_outcomes`].

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::el_core::el_ratio;
use crate::math::{exp_m1, ln, powf, sqrt};
use crate::mle::{mle_cov, mle_fit};
use crate::models::{excesses_from_sorted, sample, sorted_descending, GpdParams, ModelSpec};
use crate::profile_ci::{el_critical_value, elp_critical_value, elp_ratio, profile_sigma_with_fit};
use crate::rng::{derive_seed, stream};
use crate::statfun::{chi2_quantile, normal_quantile, Probability};
use crate::zhang::{sigma_matrix, wald_stat, zhang_fit, ZhangFit};
use crate::{Calibration, Error, Result};

/// `σ₀(u) = t·U′(t)` with `t = 1/F̄(u)`: the scale of the GPD approximating
/// the excesses over `u`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrueScale {
    pub model: ModelSpec,
    pub u: f64,
    pub sigma0: f64,
}

pub fn true_scale(model: ModelSpec, u: f64) -> Result<TrueScale> {
    let out_of_support = || Error::Domain(format!("threshold {u} outside the support of {model}"));
    let sigma0 = match model {
        ModelSpec::Gpd(p) => {
            if !(u >= 0.0) || !u.is_finite() {
                return Err(out_of_support());
            }
            p.sigma + p.gamma * u
        }
        ModelSpec::Frechet { gamma } => {
            if !(u > 0.0) || !u.is_finite() {
                return Err(out_of_support());
            }
            // t − 1 = F(u)/F̄(u) with F = exp(−u^{−1/γ})
            let w = powf(u, -1.0 / gamma);
            let t_minus_1 = exp_ratio(-w);
            gamma * powf(u, (gamma + 1.0) / gamma) / t_minus_1
        }
        ModelSpec::Burr { lambda, tau } => {
            if !(u > 0.0) || !u.is_finite() {
                return Err(out_of_support());
            }
            (lambda / tau) * (1.0 + powf(u, tau)) * powf(u, 1.0 - tau)
        }
    };
    if !(sigma0 > 0.0) || !sigma0.is_finite() {
        return Err(Error::Domain(format!(
            "true scale not representable at u={u} for {model}"
        )));
    }
    Ok(TrueScale { model, u, sigma0 })
}

/// `e^x / (1 − e^x)` for `x < 0`, without cancellation.
fn exp_ratio(x: f64) -> f64 {
    -crate::math::exp(x) / exp_m1(x)
}

/// Tail quantile function `U(t) = F^{−1}(1 − 1/t)`.
pub fn tail_quantile(model: ModelSpec, t: f64) -> f64 {
    match model {
        ModelSpec::Gpd(p) => p.sigma * (powf(t, p.gamma) - 1.0) / p.gamma,
        ModelSpec::Frechet { gamma } => powf(-crate::math::ln_1p(-1.0 / t), -gamma),
        ModelSpec::Burr { lambda, tau } => powf(powf(t, lambda) - 1.0, 1.0 / tau),
    }
}

/// Closed-form `U′(t)`.
pub fn tail_quantile_derivative(model: ModelSpec, t: f64) -> f64 {
    match model {
        ModelSpec::Gpd(p) => p.sigma * powf(t, p.gamma - 1.0),
        ModelSpec::Frechet { gamma } => {
            let l = -crate::math::ln_1p(-1.0 / t);
            gamma * powf(l, -gamma - 1.0) / (t * (t - 1.0))
        }
        ModelSpec::Burr { lambda, tau } => {
            (lambda / tau) * powf(t, lambda - 1.0) * powf(powf(t, lambda) - 1.0, 1.0 / tau - 1.0)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Method {
    /// EL region for (γ, σ).
    El,
    /// Zhang Wald region for (γ, σ).
    Zhang,
    /// ML Wald region for (γ, σ).
    Ml,
    /// Profile-EL interval for γ.
    Elw,
    /// Hill-based EL interval for γ.
    Elp,
    /// Zhang normal interval for γ.
    ZhangCi,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::El,
        Method::Zhang,
        Method::Ml,
        Method::Elw,
        Method::Elp,
        Method::ZhangCi,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::El => "el",
            Method::Zhang => "zhang",
            Method::Ml => "ml",
            Method::Elw => "elw",
            Method::Elp => "elp",
            Method::ZhangCi => "zhang_ci",
        }
    }

    pub fn is_region(self) -> bool {
        matches!(self, Method::El | Method::Zhang | Method::Ml)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "unknown method `{s}` (expected el, zhang, ml, elw, elp or zhang_ci)"
                ))
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageConfig {
    pub model: ModelSpec,
    pub n: usize,
    pub reps: usize,
    pub k_values: Vec<usize>,
    pub methods: Vec<Method>,
    pub level: Probability,
    pub seed: u64,
    pub r: f64,
    /// Calibration of the EL region statistic.
    pub region_calibration: Calibration,
    /// Calibration of the profile (ELW) statistic.
    pub ci_calibration: Calibration,
    /// Exponential draws behind each ELP critical value.
    pub elp_calibration_reps: usize,
}

impl CoverageConfig {
    pub fn new(
        model: ModelSpec,
        n: usize,
        reps: usize,
        k_values: Vec<usize>,
        methods: Vec<Method>,
        level: Probability,
        seed: u64,
    ) -> Self {
        CoverageConfig {
            model,
            n,
            reps,
            k_values,
            methods,
            level,
            seed,
            r: crate::DEFAULT_R,
            region_calibration: Calibration::Fisher,
            ci_calibration: Calibration::Chi2,
            elp_calibration_reps: 2000,
        }
    }

    /// Label of the calibration used by `method`.
    pub fn calibration_label(&self, method: Method) -> &'static str {
        match method {
            Method::El => self.region_calibration.name(),
            Method::Elw => self.ci_calibration.name(),
            Method::Zhang | Method::Ml => "chi2",
            Method::Elp => "exp",
            Method::ZhangCi => "normal",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Hit,
    Miss,
    Failure,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageRecord {
    pub model: ModelSpec,
    pub n: usize,
    pub k: usize,
    pub method: Method,
    pub level: Probability,
    pub calibration: &'static str,
    pub reps: usize,
    pub hits: usize,
    pub valid_reps: usize,
    pub failures: usize,
    /// `hits / valid_reps`; NaN when no replication was valid.
    pub coverage: f64,
}

/// Critical values and checks shared by every replication.
#[derive(Debug, Clone)]
pub struct CoveragePlan {
    pub config: CoverageConfig,
    /// Per k: (EL region, ELW, ELP, Zhang/ML Wald region, Zhang CI z).
    critical: Vec<Criticals>,
}

#[derive(Debug, Clone, Copy)]
struct Criticals {
    el: f64,
    elw: f64,
    elp: f64,
    wald2: f64,
    z: f64,
}

/// Stream tag for the ELP calibration of a given k.
const ELP_TAG: u64 = 0x454C_5020_4B00_0000;

impl CoveragePlan {
    pub fn new(config: CoverageConfig) -> Result<Self> {
        crate::check_r(config.r)?;
        for &k in &config.k_values {
            if k < 5 || k >= config.n {
                return Err(Error::InvalidArgument(format!(
                    "every k must satisfy 5 <= k < n (k={k}, n={})",
                    config.n
                )));
            }
        }
        if config.methods.contains(&Method::Elp) {
            if let Some(&k) = config.k_values.iter().find(|&&k| k < 10) {
                return Err(Error::InvalidArgument(format!(
                    "ELP needs k >= 10, got {k}"
                )));
            }
        }
        let level = config.level;
        let wald2 = chi2_quantile(level, 2)?;
        let z = normal_quantile(Probability::new(0.5 * (1.0 + level.get()))?);
        let mut critical = Vec::with_capacity(config.k_values.len());
        for &k in &config.k_values {
            let has = |m| config.methods.contains(&m);
            let el = if has(Method::El) {
                el_critical_value(k, level, 2, config.region_calibration)?
            } else {
                f64::NAN
            };
            let elw = if has(Method::Elw) {
                el_critical_value(k, level, 1, config.ci_calibration)?
            } else {
                f64::NAN
            };
            let elp = if has(Method::Elp) && config.reps > 0 {
                let seed = derive_seed(config.seed, ELP_TAG ^ k as u64);
                elp_critical_value(k, level, config.elp_calibration_reps, seed)?
            } else {
                f64::NAN
            };
            critical.push(Criticals {
                el,
                elw,
                elp,
                wald2,
                z,
            });
        }
        Ok(CoveragePlan { config, critical })
    }

    /// Number of outcomes per replication: `k_values × methods`.
    pub fn cells(&self) -> usize {
        self.config.k_values.len() * self.config.methods.len()
    }
}

fn verdict(covered: Result<bool>) -> Outcome {
    match covered {
        Ok(true) => Outcome::Hit,
        Ok(false) => Outcome::Miss,
        Err(_) => Outcome::Failure,
    }
}

/// Outcomes of replication `rep`, ordered k-major then method.
///
/// Coverage is decided by the statistic at the truth. EL points outside the
/// convex hull (`l = +∞`) are misses, not failures; failures are estimator
/// breakdowns (no Zhang root, MLE non-convergence, EL solver breakdown).
pub fn replicate(plan: &CoveragePlan, rep: usize) -> Vec<Outcome> {
    let cfg = &plan.config;
    let data = sample(&cfg.model, cfg.n, &mut stream(cfg.seed, rep as u64));
    let sorted = sorted_descending(&data);
    let gamma0 = cfg.model.tail_index();
    let mut out = Vec::with_capacity(plan.cells());
    for (ki, &k) in cfg.k_values.iter().enumerate() {
        let crit = plan.critical[ki];
        let excess = excesses_from_sorted(&sorted, k).and_then(|ex| {
            let ts = true_scale(cfg.model, ex.threshold)?;
            Ok((ex, ts.sigma0))
        });
        let (ex, sigma0) = match excess {
            Ok(v) => v,
            Err(_) => {
                out.extend(cfg.methods.iter().map(|_| Outcome::Failure));
                continue;
            }
        };
        let ys = &ex.excesses;
        let truth = GpdParams {
            gamma: gamma0,
            sigma: sigma0,
        };
        let mut zhang: Option<Result<ZhangFit>> = None;
        let mut zhang_fit_once = || zhang.get_or_insert_with(|| zhang_fit(ys, cfg.r)).clone();
        for &m in &cfg.methods {
            let covered = match m {
                Method::El => zhang_fit_once()
                    .and_then(|_| el_ratio(ys, gamma0, sigma0, cfg.r).map(|l| l <= crit.el)),
                Method::Zhang => zhang_fit_once().and_then(|f| {
                    let cov = sigma_matrix(f.params.gamma, cfg.r)?;
                    Ok(wald_stat(f.params, truth, k, &cov)? <= crit.wald2)
                }),
                Method::Ml => mle_fit(ys).and_then(|f| {
                    if !f.converged {
                        return Err(Error::EstimationFailure("MLE did not converge".into()));
                    }
                    let cov = mle_cov(f.params.gamma)?;
                    Ok(wald_stat(f.params, truth, k, &cov)? <= crit.wald2)
                }),
                Method::Elw => zhang_fit_once().and_then(|f| {
                    match profile_sigma_with_fit(ys, gamma0, cfg.r, &f) {
                        Ok(p) => Ok(p.l <= crit.elw),
                        Err(Error::ProfileFailure { .. }) => Ok(false),
                        Err(e) => Err(e),
                    }
                }),
                Method::Elp => {
                    let u = ex.threshold;
                    if !(u > 0.0) {
                        Err(Error::Domain("Hill threshold must be positive".into()))
                    } else {
                        let z: Vec<f64> = sorted[..k].iter().map(|x| ln(x / u)).collect();
                        elp_ratio(&z, gamma0).map(|l| l <= crit.elp)
                    }
                }
                Method::ZhangCi => zhang_fit_once().and_then(|f| {
                    let half = crit.z * sqrt(sigma_matrix(f.params.gamma, cfg.r)?.a11 / k as f64);
                    Ok((f.params.gamma - gamma0).abs() <= half)
                }),
            };
            out.push(verdict(covered));
        }
    }
    out
}

/// Folds per-replication outcomes (in replication order) into records.
pub fn fold_outcomes<I>(plan: &CoveragePlan, outcomes: I) -> Vec<CoverageRecord>
where
    I: IntoIterator<Item = Vec<Outcome>>,
{
    let cfg = &plan.config;
    let cells = plan.cells();
    let mut hits = alloc::vec![0usize; cells];
    let mut fails = alloc::vec![0usize; cells];
    let mut reps = 0usize;
    for row in outcomes {
        debug_assert_eq!(row.len(), cells);
        for (c, o) in row.into_iter().enumerate() {
            match o {
                Outcome::Hit => hits[c] += 1,
                Outcome::Miss => {}
                Outcome::Failure => fails[c] += 1,
            }
        }
        reps += 1;
    }
    if reps == 0 {
        return Vec::new();
    }
    let mut records = Vec::with_capacity(cells);
    for (ki, &k) in cfg.k_values.iter().enumerate() {
        for (mi, &m) in cfg.methods.iter().enumerate() {
            let c = ki * cfg.methods.len() + mi;
            let valid = reps - fails[c];
            records.push(CoverageRecord {
                model: cfg.model,
                n: cfg.n,
                k,
                method: m,
                level: cfg.level,
                calibration: cfg.calibration_label(m),
                reps,
                hits: hits[c],
                valid_reps: valid,
                failures: fails[c],
                coverage: if valid == 0 {
                    f64::NAN
                } else {
                    hits[c] as f64 / valid as f64
                },
            });
        }
    }
    records
}

/// Sequential coverage run.
pub fn run_coverage(config: &CoverageConfig) -> Result<Vec<CoverageRecord>> {
    let plan = CoveragePlan::new(config.clone())?;
    Ok(fold_outcomes(
        &plan,
        (0..config.reps).map(|j| replicate(&plan, j)),
    ))
}

/// Parses `a:b:step`, `a,b,c` or a single value.
pub fn parse_k_values(s: &str) -> Result<Vec<usize>> {
    let bad = || Error::InvalidArgument(format!("invalid k specification `{s}`"));
    let parse = |t: &str| t.trim().parse::<usize>().map_err(|_| bad());
    let ks: Vec<usize> = if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        let (a, b, step) = match parts.as_slice() {
            [a, b] => (parse(a)?, parse(b)?, 1),
            [a, b, st] => (parse(a)?, parse(b)?, parse(st)?),
            _ => return Err(bad()),
        };
        if step == 0 || a > b {
            return Err(bad());
        }
        (a..=b).step_by(step).collect()
    } else {
        s.split(',').map(parse).collect::<Result<_>>()?
    };
    if ks.is_empty() {
        return Err(bad());
    }
    Ok(ks)
}

pub fn method_list(methods: &[Method]) -> String {
    let names: Vec<&str> = methods.iter().map(|m| m.name()).collect();
    names.join(",")
}
