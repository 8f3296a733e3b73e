//! Special functions and the quantiles used by every calibration.
//!
//! Incomplete gamma and beta use the usual series / continued-fraction split;
//! their inverses are safeguarded Newton iterations that fall back to
//! bisection whenever a step leaves the current bracket.

use alloc::format;

use crate::math::{exp, ln, ln_1p, sqrt};
use crate::{Error, Result};

/// A probability strictly inside (0, 1).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Probability(f64);

impl Probability {
    pub fn new(value: f64) -> Result<Self> {
        if value > 0.0 && value < 1.0 {
            Ok(Probability(value))
        } else {
            Err(Error::Domain(format!(
                "probability must lie in (0, 1), got {value}"
            )))
        }
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Probability {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        Probability::new(value)
    }
}

const EPS: f64 = 1e-16;
const TINY: f64 = 1e-300;
const MAX_SERIES: usize = 200_000;

/// `ln Γ(x)` for `x > 0`.
pub fn ln_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("ln_gamma requires x > 0, got {x}")));
    }
    Ok(libm::lgamma_r(x).0)
}

fn lgamma(x: f64) -> f64 {
    libm::lgamma_r(x).0
}

/// Regularized lower incomplete gamma `P(a, x)`.
pub fn gamma_p(a: f64, x: f64) -> Result<f64> {
    check_gamma_args(a, x)?;
    if x == 0.0 {
        return Ok(0.0);
    }
    if x < a + 1.0 {
        Ok(gamma_series(a, x))
    } else {
        Ok(1.0 - gamma_cont_frac(a, x))
    }
}

/// Regularized upper incomplete gamma `Q(a, x) = 1 − P(a, x)`.
pub fn gamma_q(a: f64, x: f64) -> Result<f64> {
    check_gamma_args(a, x)?;
    if x == 0.0 {
        return Ok(1.0);
    }
    if x < a + 1.0 {
        Ok(1.0 - gamma_series(a, x))
    } else {
        Ok(gamma_cont_frac(a, x))
    }
}

fn check_gamma_args(a: f64, x: f64) -> Result<()> {
    if !(a > 0.0) || !a.is_finite() || !(x >= 0.0) {
        return Err(Error::Domain(format!(
            "incomplete gamma needs a > 0, x >= 0 (a={a}, x={x})"
        )));
    }
    Ok(())
}

fn gamma_prefactor(a: f64, x: f64) -> f64 {
    exp(-x + a * ln(x) - lgamma(a))
}

fn gamma_series(a: f64, x: f64) -> f64 {
    let mut ap = a;
    let mut term = 1.0 / a;
    let mut sum = term;
    for _ in 0..MAX_SERIES {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term.abs() < sum.abs() * EPS {
            break;
        }
    }
    sum * gamma_prefactor(a, x)
}

// Modified Lentz evaluation of the continued fraction for Q(a, x).
fn gamma_cont_frac(a: f64, x: f64) -> f64 {
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_SERIES {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    gamma_prefactor(a, x) * h
}

/// Regularized incomplete beta `I_x(a, b)`.
pub fn beta_inc(a: f64, b: f64, x: f64) -> Result<f64> {
    if !(a > 0.0) || !(b > 0.0) || !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!(
            "incomplete beta needs a, b > 0 and x in [0, 1] (a={a}, b={b}, x={x})"
        )));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x == 1.0 {
        return Ok(1.0);
    }
    let ln_front = lgamma(a + b) - lgamma(a) - lgamma(b) + a * ln(x) + b * ln_1p(-x);
    let front = exp(ln_front);
    if x < (a + 1.0) / (a + b + 2.0) {
        Ok(front * beta_cont_frac(a, b, x) / a)
    } else {
        Ok(1.0 - front * beta_cont_frac(b, a, 1.0 - x) / b)
    }
}

fn beta_cont_frac(a: f64, b: f64, x: f64) -> f64 {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..MAX_SERIES {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Inverts a CDF on `(lo, hi)` given its density, by Newton steps kept inside
/// a shrinking bracket. `hi` may be `+∞`, in which case it is found by doubling.
fn invert_cdf<C, D>(p: f64, mut cdf: C, mut density: D, guess: f64, lo: f64, hi: f64) -> f64
where
    C: FnMut(f64) -> f64,
    D: FnMut(f64) -> f64,
{
    let (mut lo, mut hi) = (lo, hi);
    if hi.is_infinite() {
        let mut probe = guess.max(1.0);
        while cdf(probe) < p {
            lo = probe;
            probe *= 2.0;
        }
        hi = probe;
    }
    let mut x = if guess > lo && guess < hi {
        guess
    } else {
        0.5 * (lo + hi)
    };
    for _ in 0..500 {
        let err = cdf(x) - p;
        if err == 0.0 {
            return x;
        }
        if err < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let dens = density(x);
        let mut next = if dens > 0.0 && dens.is_finite() {
            x - err / dens
        } else {
            f64::NAN
        };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= 4.0 * f64::EPSILON * x.abs().max(f64::MIN_POSITIVE)
            || hi - lo <= 4.0 * f64::EPSILON * hi.abs()
        {
            return next;
        }
        x = next;
    }
    x
}

/// `P(χ²(df) ≤ x)`.
pub fn chi2_cdf(x: f64, df: u32) -> Result<f64> {
    if df == 0 {
        return Err(Error::Domain("chi-square needs df >= 1".into()));
    }
    if x <= 0.0 {
        return Ok(0.0);
    }
    gamma_p(0.5 * df as f64, 0.5 * x)
}

/// Quantile of χ²(df) by inverting the regularized incomplete gamma function.
pub fn chi2_quantile(p: Probability, df: u32) -> Result<f64> {
    if df == 0 {
        return Err(Error::Domain("chi-square needs df >= 1".into()));
    }
    let a = 0.5 * df as f64;
    let p = p.get();
    let ln_norm = lgamma(a);
    // Wilson–Hilferty start
    let z = normal_quantile_approx(p);
    let h = 2.0 / (9.0 * df as f64);
    let c = 1.0 - h + z * sqrt(h);
    let wh = df as f64 * c * c * c;
    let guess = if wh > 0.0 {
        0.5 * wh
    } else {
        0.5 * df as f64 * 0.1
    };
    let y = invert_cdf(
        p,
        |y| {
            if y < a + 1.0 {
                gamma_series(a, y)
            } else {
                1.0 - gamma_cont_frac(a, y)
            }
        },
        |y| exp((a - 1.0) * ln(y) - y - ln_norm),
        guess,
        0.0,
        f64::INFINITY,
    );
    Ok(2.0 * y)
}

/// `P(F(d1, d2) ≤ x)`.
pub fn f_cdf(x: f64, d1: u32, d2: u32) -> Result<f64> {
    if d1 == 0 || d2 == 0 {
        return Err(Error::Domain("F distribution needs d1, d2 >= 1".into()));
    }
    if x <= 0.0 {
        return Ok(0.0);
    }
    let (d1, d2) = (d1 as f64, d2 as f64);
    beta_inc(0.5 * d1, 0.5 * d2, d1 * x / (d1 * x + d2))
}

/// Quantile of F(d1, d2) by inverting the regularized incomplete beta function.
pub fn f_quantile(p: Probability, d1: u32, d2: u32) -> Result<f64> {
    if d1 == 0 || d2 == 0 {
        return Err(Error::Domain("F distribution needs d1, d2 >= 1".into()));
    }
    let (a, b) = (0.5 * d1 as f64, 0.5 * d2 as f64);
    let ln_beta = lgamma(a) + lgamma(b) - lgamma(a + b);
    let y = invert_cdf(
        p.get(),
        |y| beta_inc(a, b, y).unwrap_or(f64::NAN),
        |y| exp((a - 1.0) * ln(y) + (b - 1.0) * ln_1p(-y) - ln_beta),
        a / (a + b),
        0.0,
        1.0,
    );
    Ok(d2 as f64 * y / (d1 as f64 * (1.0 - y)))
}

/// Critical value of the Fisher calibration.
///
/// `dim = 2`: `f` with `P((2(k−1)/(k−2))·F(2, k−2) ≤ f) = level`.
/// `dim = 1`: `f_quantile(level, 1, k−1)`, the `q(k−1)/(k−q)` rule at `q = 1`.
pub fn fisher_critical(k: usize, level: Probability, dim: u32) -> Result<f64> {
    match dim {
        1 | 2 => {}
        _ => {
            return Err(Error::InvalidArgument(format!(
                "Fisher calibration dimension must be 1 or 2, got {dim}"
            )))
        }
    }
    if k < 5 || k <= dim as usize + 2 {
        return Err(Error::Calibration(format!(
            "Fisher calibration needs k >= 5 and k > dim + 2 (k={k}, dim={dim})"
        )));
    }
    let kf = k as f64;
    let q = dim as f64;
    let d2 = u32::try_from(k - dim as usize)
        .map_err(|_| Error::Calibration(format!("k too large for the F quantile: {k}")))?;
    Ok(q * (kf - 1.0) / (kf - q) * f_quantile(level, dim, d2)?)
}

/// Standard normal CDF.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / core::f64::consts::SQRT_2)
}

// Acklam's rational approximation, |relative error| < 1.2e-9.
fn normal_quantile_approx(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    const P_LOW: f64 = 0.024_25;
    if p < P_LOW {
        let q = sqrt(-2.0 * ln(p));
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = sqrt(-2.0 * ln_1p(-p));
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    }
}

/// Standard normal quantile: rational approximation refined by one Halley
/// step on the error function.
pub fn normal_quantile(p: Probability) -> f64 {
    let p = p.get();
    let x = normal_quantile_approx(p);
    let e = normal_cdf(x) - p;
    let u = e * sqrt(2.0 * core::f64::consts::PI) * exp(0.5 * x * x);
    x - u / (1.0 + 0.5 * x * u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::vec::Vec;

    fn p(v: f64) -> Probability {
        Probability::new(v).unwrap()
    }

    #[test]
    fn ln_gamma_anchors() {
        assert!(ln_gamma(1.0).unwrap().abs() < 1e-15);
        assert!((ln_gamma(5.0).unwrap() - ln(24.0)).abs() < 1e-14);
        assert!((ln_gamma(0.5).unwrap() - 0.572_364_942_924_700_1).abs() < 1e-15);
        assert!(matches!(ln_gamma(0.0), Err(Error::Domain(_))));
        assert!(matches!(ln_gamma(-1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn ln_gamma_matches_stirling_series_for_large_arguments() {
        // independent oracle: Stirling series with four correction terms
        for &x in &[50.0, 1e3, 1e4, 1e6] {
            let stirling =
                (x - 0.5) * ln(x) - x + 0.5 * ln(2.0 * core::f64::consts::PI) + 1.0 / (12.0 * x)
                    - 1.0 / (360.0 * x * x * x)
                    + 1.0 / (1260.0 * x.powi(5))
                    - 1.0 / (1680.0 * x.powi(7));
            let rel = (ln_gamma(x).unwrap() - stirling).abs() / stirling.abs();
            assert!(rel < 1e-12, "x={x} rel={rel}");
        }
    }

    #[test]
    fn ln_gamma_recurrence() {
        for i in 0..200 {
            let x = 0.5 + i as f64 * 0.37;
            let lhs = ln_gamma(x + 1.0).unwrap();
            let rhs = ln_gamma(x).unwrap() + ln(x);
            assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0), "x={x}");
        }
    }

    #[test]
    fn chi2_two_df_is_exponential() {
        assert!((chi2_quantile(p(0.95), 2).unwrap() - 5.991_464_547).abs() < 1e-9);
        assert!((chi2_quantile(p(0.95), 2).unwrap() + 2.0 * ln(0.05)).abs() < 1e-12);
        assert!((chi2_quantile(p(0.5), 2).unwrap() - 1.386_294_361).abs() < 1e-9);
    }

    // Φ by composite Simpson on the density, then bisection: no error function
    // or incomplete gamma involved.
    fn normal_quantile_oracle(prob: f64) -> f64 {
        let phi = |z: f64| {
            let n = 20_000;
            let h = z / n as f64;
            let dens = |t: f64| exp(-0.5 * t * t);
            let mut s = dens(0.0) + dens(z);
            for i in 1..n {
                let w = if i % 2 == 1 { 4.0 } else { 2.0 };
                s += w * dens(i as f64 * h);
            }
            0.5 + s * h / 3.0 / sqrt(2.0 * core::f64::consts::PI)
        };
        let (mut lo, mut hi) = (0.0, 10.0);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if phi(mid) < prob {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn chi2_one_df_is_squared_normal_quantile() {
        let z = normal_quantile_oracle(0.975);
        assert!((z - 1.959_963_984_540_054).abs() < 1e-12);
        let q = chi2_quantile(p(0.95), 1).unwrap();
        assert!((q - z * z).abs() < 1e-9);
        assert!((q - 3.841_458_820_694_124).abs() < 1e-9);
    }

    #[test]
    fn normal_quantile_accuracy() {
        assert!((normal_quantile(p(0.975)) - 1.959_963_984_540_054).abs() < 1e-12);
        assert!(normal_quantile(p(0.5)).abs() < 1e-15);
        assert!((normal_quantile(p(0.01)) + 2.326_347_874_040_841).abs() < 1e-12);
    }

    #[test]
    fn chi2_quantile_round_trips_and_increases() {
        for df in [1u32, 2, 3, 5, 10, 50, 200] {
            let mut prev = 0.0;
            for i in 1..100 {
                let prob = i as f64 / 100.0;
                let q = chi2_quantile(p(prob), df).unwrap();
                assert!(q > prev, "df={df} p={prob}");
                prev = q;
                assert!((chi2_cdf(q, df).unwrap() - prob).abs() < 1e-8);
            }
        }
    }

    // F(2, m) has the closed-form CDF 1 − (1 + 2x/m)^(−m/2); invert it by bisection.
    fn f2_quantile_oracle(prob: f64, m: f64) -> f64 {
        let cdf = |x: f64| 1.0 - libm::pow(1.0 + 2.0 * x / m, -0.5 * m);
        let (mut lo, mut hi) = (0.0, 1e3);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if cdf(mid) < prob {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    // F(1, m) = T(m)²: Simpson integration of the normalised t density, then bisection.
    fn f1_quantile_oracle(prob: f64, m: f64) -> f64 {
        let dens = |t: f64| libm::pow(1.0 + t * t / m, -0.5 * (m + 1.0));
        let simpson = |a: f64, b: f64, n: usize| {
            let h = (b - a) / n as f64;
            let mut s = dens(a) + dens(b);
            for i in 1..n {
                s += if i % 2 == 1 { 4.0 } else { 2.0 } * dens(a + i as f64 * h);
            }
            s * h / 3.0
        };
        let total = simpson(0.0, 60.0, 600_000);
        let (mut lo, mut hi) = (0.0, 10.0);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            let t = sqrt(mid);
            if simpson(0.0, t, 20_000) / total < prob {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn f_quantile_examples() {
        assert!((f_quantile(p(0.5), 7, 7).unwrap() - 1.0).abs() < 1e-9);
        let oracle = f2_quantile_oracle(0.95, 198.0);
        assert!(
            (oracle - 3.041_518_245_686_6).abs() < 1e-6,
            "oracle {oracle}"
        );
        assert!((f_quantile(p(0.95), 2, 198).unwrap() - oracle).abs() < 1e-9);
        let oracle1 = f1_quantile_oracle(0.95, 199.0);
        assert!(
            (oracle1 - 3.888_612_612_417_3).abs() < 1e-6,
            "oracle {oracle1}"
        );
        assert!((f_quantile(p(0.95), 1, 199).unwrap() - oracle1).abs() < 1e-8);
    }

    #[test]
    fn f_quantile_round_trips() {
        for (d1, d2) in [
            (1u32, 4u32),
            (2, 10),
            (2, 198),
            (1, 199),
            (5, 3),
            (2, 100_000),
        ] {
            for i in 1..40 {
                let prob = i as f64 / 40.0;
                let q = f_quantile(p(prob), d1, d2).unwrap();
                assert!(
                    (f_cdf(q, d1, d2).unwrap() - prob).abs() < 1e-8,
                    "d1={d1} d2={d2} p={prob}"
                );
            }
        }
    }

    #[test]
    fn fisher_critical_examples_and_limit() {
        let f200 = fisher_critical(200, p(0.95), 2).unwrap();
        assert!((f200 - 2.0 * 199.0 / 198.0 * f2_quantile_oracle(0.95, 198.0)).abs() < 1e-8);
        let f200_1 = fisher_critical(200, p(0.95), 1).unwrap();
        assert!((f200_1 - f_quantile(p(0.95), 1, 199).unwrap()).abs() < 1e-15);

        let chi2 = chi2_quantile(p(0.95), 2).unwrap();
        let ks: Vec<usize> = (2..=6).map(|e| 10usize.pow(e)).collect();
        let vals: Vec<f64> = ks
            .iter()
            .map(|&k| fisher_critical(k, p(0.95), 2).unwrap())
            .collect();
        for w in vals.windows(2) {
            assert!(w[1] < w[0]);
        }
        assert!(vals.iter().all(|&v| v > chi2));
        assert!((vals[4] - chi2).abs() < 1e-3);
        let chi1 = chi2_quantile(p(0.95), 1).unwrap();
        for &k in &ks {
            assert!(fisher_critical(k, p(0.95), 1).unwrap() > chi1);
        }
    }

    #[test]
    fn fisher_critical_rejects_small_k() {
        assert!(matches!(
            fisher_critical(4, p(0.95), 2),
            Err(Error::Calibration(_))
        ));
        assert!(matches!(
            fisher_critical(3, p(0.95), 1),
            Err(Error::Calibration(_))
        ));
        assert!(fisher_critical(5, p(0.95), 2).is_ok());
        assert!(matches!(
            fisher_critical(10, p(0.95), 3),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn probability_domain() {
        assert!(Probability::new(0.0).is_err());
        assert!(Probability::new(1.0).is_err());
        assert!(Probability::new(f64::NAN).is_err());
        assert!(Probability::try_from(0.3).is_ok());
    }
}
