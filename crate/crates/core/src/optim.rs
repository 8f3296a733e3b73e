//! Scalar root finding and minimisation (Brent's methods).
//!
//! The root finder tolerates `+∞` function values on one side of the root:
//! infeasible EL points evaluate to `+∞`, and the interpolation steps fall back
//! to bisection whenever a bracket value is not finite.

use crate::math::sqrt;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootResult {
    pub x: f64,
    pub fx: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct RootOptions {
    /// Stop once `|f(x)| <= ftol`.
    pub ftol: f64,
    /// Stop once the bracket is narrower than `xtol` (absolute).
    pub xtol: f64,
    pub max_iter: usize,
}

impl Default for RootOptions {
    fn default() -> Self {
        RootOptions {
            ftol: 0.0,
            xtol: 0.0,
            max_iter: 200,
        }
    }
}

/// Brent's zero-in on `[a, b]` given `f(a)` and `f(b)` of opposite sign (or
/// either exactly zero). `converged` reports whether `|f(x)| <= ftol` or the
/// bracket collapsed below `xtol` (or machine precision).
pub fn brent_root<F>(mut f: F, a: f64, b: f64, fa: f64, fb: f64, opts: RootOptions) -> RootResult
where
    F: FnMut(f64) -> f64,
{
    if fa == 0.0 {
        return RootResult {
            x: a,
            fx: fa,
            iterations: 0,
            converged: true,
        };
    }
    if fb == 0.0 {
        return RootResult {
            x: b,
            fx: fb,
            iterations: 0,
            converged: true,
        };
    }
    debug_assert!(fa.signum() != fb.signum(), "root not bracketed");

    let (mut a, mut b, mut fa, mut fb) = (a, b, fa, fb);
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;

    for iter in 1..=opts.max_iter {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * opts.xtol;
        let m = 0.5 * (c - b);
        if fb.abs() <= opts.ftol || m.abs() <= tol || fb == 0.0 {
            return RootResult {
                x: b,
                fx: fb,
                iterations: iter,
                converged: true,
            };
        }
        let interpolate = e.abs() >= tol && fa.abs() > fb.abs() && fa.is_finite() && fc.is_finite();
        if interpolate {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                // secant
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                // inverse quadratic interpolation
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b);
    }
    RootResult {
        x: b,
        fx: fb,
        iterations: opts.max_iter,
        converged: false,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinResult {
    pub x: f64,
    pub fx: f64,
    pub iterations: usize,
}

/// Brent's golden-section/parabolic minimiser on `[a, b]`, started from an
/// interior point `x0` with known value `f0`. Non-finite values are accepted
/// and simply never chosen as a parabolic vertex.
pub fn brent_min<F>(
    mut f: F,
    a: f64,
    b: f64,
    x0: f64,
    f0: f64,
    xtol: f64,
    max_iter: usize,
) -> MinResult
where
    F: FnMut(f64) -> f64,
{
    const CGOLD: f64 = 0.381_966_011_250_105_1;
    let (mut a, mut b) = (a.min(b), a.max(b));
    let (mut x, mut w, mut v) = (x0, x0, x0);
    let (mut fx, mut fw, mut fv) = (f0, f0, f0);
    let mut d: f64 = 0.0;
    let mut e: f64 = 0.0;

    for iter in 1..=max_iter {
        let xm = 0.5 * (a + b);
        let tol1 = sqrt(f64::EPSILON) * x.abs() * 1e-2 + xtol;
        let tol2 = 2.0 * tol1;
        if (x - xm).abs() <= tol2 - 0.5 * (b - a) {
            return MinResult {
                x,
                fx,
                iterations: iter,
            };
        }
        let mut golden = true;
        if e.abs() > tol1 && fx.is_finite() && fw.is_finite() && fv.is_finite() {
            let r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            }
            q = q.abs();
            let etemp = e;
            if p.abs() < (0.5 * q * etemp).abs() && p > q * (a - x) && p < q * (b - x) {
                e = d;
                d = p / q;
                let u = x + d;
                if u - a < tol2 || b - u < tol2 {
                    d = tol1.copysign(xm - x);
                }
                golden = false;
            }
        }
        if golden {
            e = if x >= xm { a - x } else { b - x };
            d = CGOLD * e;
        }
        let u = if d.abs() >= tol1 {
            x + d
        } else {
            x + tol1.copysign(d)
        };
        let fu = f(u);
        if fu <= fx {
            if u >= x {
                a = x;
            } else {
                b = x;
            }
            v = w;
            fv = fw;
            w = x;
            fw = fx;
            x = u;
            fx = fu;
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                v = w;
                fv = fw;
                w = u;
                fw = fu;
            } else if fu <= fv || v == x || v == w {
                v = u;
                fv = fu;
            }
        }
    }
    MinResult {
        x,
        fx,
        iterations: max_iter,
    }
}
