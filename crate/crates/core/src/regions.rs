//! Two-dimensional confidence regions for (γ, σ).
//!
//! EL regions are sublevel sets `{l(γ, σ) ≤ c}` traced on a grid; Wald
//! regions are ellipses in `(γ̂ − γ, σ̂/σ − 1)` coordinates mapped back to σ.
//! Membership is always decided by the statistic itself, never by the traced
//! polygon.

use alloc::format;
use alloc::vec::Vec;

use crate::contour::{contour_lines, GridField, Polyline};
use crate::el_core::el_ratio;
use crate::linalg::Sym2;
use crate::math::{cos, sin, sqrt};
use crate::models::GpdParams;
use crate::optim::{brent_root, RootOptions};
use crate::profile_ci::el_critical_value;
use crate::statfun::{chi2_quantile, Probability};
use crate::zhang::{sigma_matrix, wald_stat, zhang_fit};
use crate::{Calibration, Error, Result};

pub const DEFAULT_GRID_SIZE: usize = 96;
pub const MIN_GRID_SIZE: usize = 16;
/// Half-width of the default grid in Wald standard deviations.
pub const DEFAULT_GRID_SDS: f64 = 4.0;
pub const MAX_EXPANSIONS: usize = 8;
/// Boundary vertices are polished until `|l − c| ≤ REFINE_TOL·c`.
pub const REFINE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegionMethod {
    El,
    ZhangWald,
    MlWald,
}

impl RegionMethod {
    pub fn name(self) -> &'static str {
        match self {
            RegionMethod::El => "el",
            RegionMethod::ZhangWald => "zhang",
            RegionMethod::MlWald => "ml",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub gamma_range: (f64, f64),
    pub sigma_range: (f64, f64),
    pub n_gamma: usize,
    pub n_sigma: usize,
}

fn check_range(name: &str, (lo, hi): (f64, f64)) -> Result<()> {
    if !(lo > 0.0 && lo < hi && hi.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "{name} range must satisfy 0 < lo < hi, got ({lo}, {hi})"
        )));
    }
    Ok(())
}

fn nodes(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| {
            if i + 1 == n {
                hi
            } else {
                lo + (hi - lo) * i as f64 / (n - 1) as f64
            }
        })
        .collect()
}

impl GridSpec {
    pub fn new(
        gamma_range: (f64, f64),
        sigma_range: (f64, f64),
        n_gamma: usize,
        n_sigma: usize,
    ) -> Result<Self> {
        check_range("gamma", gamma_range)?;
        check_range("sigma", sigma_range)?;
        if n_gamma < MIN_GRID_SIZE || n_sigma < MIN_GRID_SIZE {
            return Err(Error::InvalidArgument(format!(
                "grid needs at least {MIN_GRID_SIZE} nodes per axis, got {n_gamma}x{n_sigma}"
            )));
        }
        Ok(GridSpec {
            gamma_range,
            sigma_range,
            n_gamma,
            n_sigma,
        })
    }

    /// `center ± sds` Wald standard deviations per axis (Zhang covariance),
    /// intersected with the positive quadrant.
    pub fn around(center: GpdParams, k: usize, r: f64, n: usize, sds: f64) -> Result<Self> {
        let cov = sigma_matrix(center.gamma, r)?;
        let kf = k as f64;
        let sd_gamma = sqrt(cov.a11 / kf);
        let sd_sigma = center.sigma * sqrt(cov.a22 / kf);
        let clamp = |c: f64, sd: f64| ((c - sds * sd).max(c * 1e-3), c + sds * sd);
        GridSpec::new(
            clamp(center.gamma, sd_gamma),
            clamp(center.sigma, sd_sigma),
            n,
            n,
        )
    }

    pub fn gamma_nodes(&self) -> Vec<f64> {
        nodes(self.gamma_range.0, self.gamma_range.1, self.n_gamma)
    }

    pub fn sigma_nodes(&self) -> Vec<f64> {
        nodes(self.sigma_range.0, self.sigma_range.1, self.n_sigma)
    }

    /// Grid points in row-major order (σ rows, γ fastest).
    pub fn points(&self) -> Vec<(f64, f64)> {
        let gs = self.gamma_nodes();
        let ss = self.sigma_nodes();
        let mut out = Vec::with_capacity(gs.len() * ss.len());
        for &s in &ss {
            for &g in &gs {
                out.push((g, s));
            }
        }
        out
    }

    pub fn contains(&self, p: GpdParams) -> bool {
        (self.gamma_range.0..=self.gamma_range.1).contains(&p.gamma)
            && (self.sigma_range.0..=self.sigma_range.1).contains(&p.sigma)
    }

    /// Smallest extension of the ranges that covers `p`, with a 10% margin.
    pub fn including(mut self, p: GpdParams) -> Self {
        fn widen(range: &mut (f64, f64), x: f64) {
            let margin = 0.1 * (range.1 - range.0);
            if x < range.0 {
                range.0 = (x - margin).max(0.5 * x);
            }
            if x > range.1 {
                range.1 = x + margin;
            }
        }
        widen(&mut self.gamma_range, p.gamma);
        widen(&mut self.sigma_range, p.sigma);
        self
    }

    /// Pushes the flagged sides (`[γ lo, γ hi, σ lo, σ hi]`) out by half the
    /// span, never crossing zero.
    pub fn expanded(mut self, sides: [bool; 4]) -> Self {
        fn push(range: &mut (f64, f64), lo: bool, hi: bool) {
            let half = 0.5 * (range.1 - range.0);
            if lo {
                range.0 = (range.0 - half).max(0.25 * range.0);
            }
            if hi {
                range.1 += half;
            }
        }
        push(&mut self.gamma_range, sides[0], sides[1]);
        push(&mut self.sigma_range, sides[2], sides[3]);
        self
    }
}

/// Which grid borders carry a vertex inside the region:
/// `[γ lo, γ hi, σ lo, σ hi]`.
pub fn border_hits(grid: &GridSpec, values: &[f64], critical: f64) -> [bool; 4] {
    let (nx, ny) = (grid.n_gamma, grid.n_sigma);
    let inside = |i: usize, j: usize| values[j * nx + i] <= critical;
    [
        (0..ny).any(|j| inside(0, j)),
        (0..ny).any(|j| inside(nx - 1, j)),
        (0..nx).any(|i| inside(i, 0)),
        (0..nx).any(|i| inside(i, ny - 1)),
    ]
}

#[derive(Debug, Clone, PartialEq)]
enum Membership {
    El {
        excesses: Vec<f64>,
        r: f64,
    },
    Wald {
        estimate: GpdParams,
        cov: Sym2,
        k: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceRegion {
    pub method: RegionMethod,
    pub level: Probability,
    pub critical_value: f64,
    pub center: GpdParams,
    /// Evaluated grid (EL only) with row-major statistic values.
    pub grid: Option<GridSpec>,
    pub values: Vec<f64>,
    pub boundary: Vec<Polyline>,
    /// Some boundary point has σ ≤ 0 (Wald only; impossible for EL).
    pub clipped: bool,
    /// Number of automatic grid expansions performed.
    pub expansions: usize,
    membership: Membership,
}

impl ConfidenceRegion {
    /// Statistic at `(gamma, sigma)`; `+∞` outside the parameter space or
    /// where EL is infeasible.
    pub fn statistic(&self, gamma: f64, sigma: f64) -> f64 {
        match &self.membership {
            Membership::El { excesses, r } => el_statistic(excesses, *r, gamma, sigma),
            Membership::Wald { estimate, cov, k } => {
                if !(sigma > 0.0) {
                    return f64::INFINITY;
                }
                let h = GpdParams { gamma, sigma };
                wald_stat(*estimate, h, *k, cov).unwrap_or(f64::INFINITY)
            }
        }
    }

    /// Sum of the closed boundary polygon areas.
    pub fn area(&self) -> f64 {
        self.boundary
            .iter()
            .filter(|l| l.closed)
            .map(|l| l.signed_area().abs())
            .sum()
    }

    pub fn vertex_count(&self) -> usize {
        self.boundary.iter().map(|l| l.points.len()).sum()
    }
}

pub fn region_contains(region: &ConfidenceRegion, point: (f64, f64)) -> bool {
    region.statistic(point.0, point.1) <= region.critical_value
}

/// EL ratio guarded to the open positive quadrant; errors count as `+∞`.
pub fn el_statistic(excesses: &[f64], r: f64, gamma: f64, sigma: f64) -> f64 {
    if !(gamma > 0.0 && sigma > 0.0) {
        return f64::INFINITY;
    }
    el_ratio(excesses, gamma, sigma, r).unwrap_or(f64::INFINITY)
}

/// Sequential grid evaluation in [`GridSpec::points`] order.
pub fn grid_values(excesses: &[f64], r: f64, grid: &GridSpec) -> Vec<f64> {
    grid.points()
        .into_iter()
        .map(|(g, s)| el_statistic(excesses, r, g, s))
        .collect()
}

/// EL region with sequential grid evaluation; `grid = None` uses the default
/// grid around the MELE.
pub fn el_region(
    excesses: &[f64],
    r: f64,
    level: Probability,
    grid: Option<GridSpec>,
    calibration: Calibration,
) -> Result<ConfidenceRegion> {
    el_region_with(excesses, r, level, grid, calibration, |g| {
        grid_values(excesses, r, g)
    })
}

/// As [`el_region`], with a caller-supplied grid evaluator (which must return
/// the same values as [`grid_values`], e.g. computed in parallel).
pub fn el_region_with<E>(
    excesses: &[f64],
    r: f64,
    level: Probability,
    grid: Option<GridSpec>,
    calibration: Calibration,
    mut evaluate: E,
) -> Result<ConfidenceRegion>
where
    E: FnMut(&GridSpec) -> Vec<f64>,
{
    let fit = zhang_fit(excesses, r)?;
    let k = excesses.len();
    let c = el_critical_value(k, level, 2, calibration)?;
    let mut grid = match grid {
        Some(g) => g,
        None => GridSpec::around(fit.params, k, r, DEFAULT_GRID_SIZE, DEFAULT_GRID_SDS)?,
    }
    .including(fit.params);
    let mut expansions = 0;
    let values = loop {
        let values = evaluate(&grid);
        let hits = border_hits(&grid, &values, c);
        if !hits.iter().any(|&h| h) || expansions == MAX_EXPANSIONS {
            break values;
        }
        grid = grid.expanded(hits);
        expansions += 1;
    };

    let xs = grid.gamma_nodes();
    let ys = grid.sigma_nodes();
    let field = GridField {
        xs: &xs,
        ys: &ys,
        values: &values,
    };
    let stat = |p: [f64; 2]| el_statistic(excesses, r, p[0], p[1]);
    // polish each crossing along its grid edge
    let locate = |pa: [f64; 2], va: f64, pb: [f64; 2], vb: f64| -> [f64; 2] {
        let at = |t: f64| [pa[0] + t * (pb[0] - pa[0]), pa[1] + t * (pb[1] - pa[1])];
        let h = |t: f64| stat(at(t)) - c;
        let opts = RootOptions {
            ftol: REFINE_TOL * c,
            xtol: 0.0,
            max_iter: 100,
        };
        let root = brent_root(h, 0.0, 1.0, va - c, vb - c, opts);
        at(root.x)
    };
    let boundary = contour_lines(field, c, locate);
    Ok(ConfidenceRegion {
        method: RegionMethod::El,
        level,
        critical_value: c,
        center: fit.params,
        grid: Some(grid),
        values,
        boundary,
        clipped: false,
        expansions,
        membership: Membership::El {
            excesses: excesses.to_vec(),
            r,
        },
    })
}

/// Wald ellipse `{k·vᵀ cov⁻¹ v ≤ χ²₂(level)}` with `v = (γ̂ − γ, σ̂/σ − 1)`,
/// traced with `n_points` vertices. Points with `1 + v₂ ≤ 0` map to σ ≤ 0 and
/// set `clipped`.
pub fn wald_region(
    fit: GpdParams,
    cov: &Sym2,
    k: usize,
    level: Probability,
    n_points: usize,
    method: RegionMethod,
) -> Result<ConfidenceRegion> {
    if method == RegionMethod::El {
        return Err(Error::InvalidArgument(
            "wald_region needs a Wald method".into(),
        ));
    }
    if n_points < 3 {
        return Err(Error::InvalidArgument(format!(
            "an ellipse needs at least 3 points, got {n_points}"
        )));
    }
    cov.inverse()?;
    let l = cov.cholesky()?;
    let c = chi2_quantile(level, 2)?;
    let scale = sqrt(c / k as f64);
    let mut points = Vec::with_capacity(n_points);
    for i in 0..n_points {
        let th = 2.0 * core::f64::consts::PI * i as f64 / n_points as f64;
        let (u1, u2) = (cos(th), sin(th));
        let v1 = scale * l[0][0] * u1;
        let v2 = scale * (l[1][0] * u1 + l[1][1] * u2);
        points.push([fit.gamma - v1, fit.sigma / (1.0 + v2)]);
    }
    // lowest v₂ on the ellipse is −scale·√cov₂₂
    let clipped = 1.0 - scale * sqrt(cov.a22) <= 0.0;
    let mut line = Polyline {
        points,
        closed: true,
    };
    if !clipped && line.signed_area() < 0.0 {
        line.points.reverse();
    }
    Ok(ConfidenceRegion {
        method,
        level,
        critical_value: c,
        center: fit,
        grid: None,
        values: Vec::new(),
        boundary: alloc::vec![line],
        clipped,
        expansions: 0,
        membership: Membership::Wald {
            estimate: fit,
            cov: *cov,
            k,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contour::point_in_polygon;
    use crate::mle::mle_cov;
    use crate::models::{extract_excesses, sample, ModelSpec};
    use crate::rng::{stream, uniform_open01};

    fn p(v: f64) -> Probability {
        Probability::new(v).unwrap()
    }

    fn excesses(spec: ModelSpec, seed: u64, n: usize, k: usize) -> Vec<f64> {
        let data = sample(&spec, n, &mut stream(seed, 0));
        extract_excesses(&data, k).unwrap().excesses
    }

    fn small_grid(ys: &[f64]) -> GridSpec {
        let fit = zhang_fit(ys, -0.5).unwrap();
        GridSpec::around(fit.params, ys.len(), -0.5, 40, DEFAULT_GRID_SDS).unwrap()
    }

    #[test]
    fn grid_spec_validation() {
        assert!(GridSpec::new((0.0, 1.0), (1.0, 2.0), 16, 16).is_err());
        assert!(GridSpec::new((1.0, 1.0), (1.0, 2.0), 16, 16).is_err());
        assert!(GridSpec::new((0.5, 1.0), (1.0, 2.0), 15, 16).is_err());
        let g = GridSpec::new((0.5, 1.0), (1.0, 2.0), 16, 20).unwrap();
        assert_eq!(g.points().len(), 320);
        assert_eq!(g.gamma_nodes()[15], 1.0);
        let far = GpdParams::new(3.0, 0.1).unwrap();
        let wide = g.including(far);
        assert!(wide.contains(far) && wide.gamma_range.0 == 0.5);
        let e = g.expanded([true, true, true, true]);
        assert!(e.gamma_range.0 > 0.0 && e.gamma_range.1 == 1.25 && e.sigma_range.1 == 2.5);
    }

    #[test]
    fn burr_region_single_component() {
        let ys = excesses(ModelSpec::burr(1.0, 1.0).unwrap(), 11, 1000, 200);
        let reg = el_region(
            &ys,
            -0.5,
            p(0.95),
            Some(small_grid(&ys)),
            Calibration::Fisher,
        )
        .unwrap();
        assert_eq!(reg.boundary.len(), 1, "{}", reg.boundary.len());
        assert!(reg.boundary[0].closed);
        assert!(reg.area().is_finite() && reg.area() > 0.0);
        assert!(reg.vertex_count() > 0);
        assert!(region_contains(&reg, (reg.center.gamma, reg.center.sigma)));
        for pt in &reg.boundary[0].points {
            assert!(pt[0] > 0.0 && pt[1] > 0.0);
            let l = el_statistic(&ys, -0.5, pt[0], pt[1]);
            assert!(
                (l - reg.critical_value).abs() <= 0.02 * reg.critical_value,
                "{l}"
            );
        }
        // truth: excesses over u of Burr(1,1) are GPD(1, 1 + u)
        let data = sample(
            &ModelSpec::burr(1.0, 1.0).unwrap(),
            1000,
            &mut stream(11, 0),
        );
        let u = extract_excesses(&data, 200).unwrap().threshold;
        let truth = (1.0, 1.0 + u);
        let direct = el_statistic(&ys, -0.5, truth.0, truth.1) <= reg.critical_value;
        assert_eq!(region_contains(&reg, truth), direct);
    }

    #[test]
    fn membership_matches_polygon_outside_band() {
        let ys = excesses(ModelSpec::gpd(0.5, 1.0).unwrap(), 12, 1000, 300);
        let reg = el_region(&ys, -0.5, p(0.95), Some(small_grid(&ys)), Calibration::Chi2).unwrap();
        let grid = reg.grid.unwrap();
        let pts = grid.points();
        let c = reg.critical_value;
        let mut rng = stream(99, 0);
        let mut checked = 0;
        for _ in 0..100 {
            let idx = (uniform_open01(&mut rng) * pts.len() as f64) as usize;
            let (g, s) = pts[idx];
            let l = reg.values[idx];
            if (l - c).abs() <= 0.02 * c {
                continue;
            }
            let in_poly = reg
                .boundary
                .iter()
                .any(|b| point_in_polygon(&b.points, [g, s]));
            assert_eq!(in_poly, l <= c, "({g}, {s}) l={l}");
            checked += 1;
        }
        assert!(checked > 80);
        assert!(!border_hits(&grid, &reg.values, c).iter().any(|&b| b));
    }

    #[test]
    fn nested_levels_and_mele_inside() {
        let ys = excesses(ModelSpec::frechet(1.0).unwrap(), 13, 1000, 150);
        let grid = small_grid(&ys);
        let r95 = el_region(&ys, -0.5, p(0.95), Some(grid), Calibration::Fisher).unwrap();
        let r99 = el_region(&ys, -0.5, p(0.99), Some(grid), Calibration::Fisher).unwrap();
        assert!(r99.critical_value > r95.critical_value);
        if r95.grid == r99.grid {
            for (a, b) in r95.values.iter().zip(&r99.values) {
                if *a <= r95.critical_value {
                    assert!(*b <= r99.critical_value);
                }
            }
        }
        assert!(r99.area() > r95.area());
        let m = r95.center;
        assert!(r95.statistic(m.gamma, m.sigma) <= 1e-8);
        assert!(!region_contains(&r95, (m.gamma, -m.sigma)));
    }

    #[test]
    fn auto_expands_tiny_grid() {
        let ys = excesses(ModelSpec::burr(1.0, 1.0).unwrap(), 14, 1000, 200);
        let fit = zhang_fit(&ys, -0.5).unwrap().params;
        let tiny = GridSpec::around(fit, 200, -0.5, 24, 0.5).unwrap();
        let reg = el_region(&ys, -0.5, p(0.95), Some(tiny), Calibration::Fisher).unwrap();
        assert!(reg.expansions > 0);
        assert_eq!(reg.boundary.len(), 1);
        assert!(reg.boundary[0].closed);
    }

    #[test]
    fn wald_ellipse_geometry() {
        let fit = GpdParams::new(1.0, 2.0).unwrap();
        let cov = sigma_matrix(1.0, -0.5).unwrap();
        let reg = wald_region(fit, &cov, 400, p(0.95), 360, RegionMethod::ZhangWald).unwrap();
        assert!(!reg.clipped);
        assert!(region_contains(&reg, (1.0, 2.0)));
        assert_eq!(reg.statistic(1.0, 2.0), 0.0);
        for pt in &reg.boundary[0].points {
            assert!((reg.statistic(pt[0], pt[1]) - reg.critical_value).abs() < 1e-9);
        }
        // semi-axes in v-space: √(c/k · eigenvalues(cov)), i.e. the inverse
        // square roots of the eigenvalues of k·cov⁻¹/c
        let c = reg.critical_value;
        let inv_eigs = cov.inverse().unwrap().eigenvalues();
        let expected: Vec<f64> = inv_eigs
            .iter()
            .map(|e| libm::sqrt(c / (400.0 * e)))
            .collect();
        let v: Vec<[f64; 2]> = reg.boundary[0]
            .points
            .iter()
            .map(|q| [fit.gamma - q[0], fit.sigma / q[1] - 1.0])
            .collect();
        let radii: Vec<f64> = v
            .iter()
            .map(|q| libm::sqrt(q[0] * q[0] + q[1] * q[1]))
            .collect();
        let rmax = radii.iter().copied().fold(0.0, f64::max);
        let rmin = radii.iter().copied().fold(f64::INFINITY, f64::min);
        assert!(
            (rmax - expected[0]).abs() < 1e-3 * expected[0],
            "{rmax} {expected:?}"
        );
        assert!(
            (rmin - expected[1]).abs() < 1e-3 * expected[1],
            "{rmin} {expected:?}"
        );
        // area in v-space shrinks 4× when k grows 4×
        let quad = wald_region(fit, &cov, 1600, p(0.95), 360, RegionMethod::ZhangWald).unwrap();
        let area_v = |r: &ConfidenceRegion| {
            let pts: Vec<[f64; 2]> = r.boundary[0]
                .points
                .iter()
                .map(|q| [fit.gamma - q[0], fit.sigma / q[1] - 1.0])
                .collect();
            crate::contour::signed_area(&pts).abs()
        };
        assert!((area_v(&reg) / area_v(&quad) - 4.0).abs() < 1e-9);
    }

    #[test]
    fn small_k_wald_clips() {
        let fit = GpdParams::new(1.0, 1.0).unwrap();
        let zc = sigma_matrix(1.0, -0.5).unwrap();
        let mc = mle_cov(1.0).unwrap();
        // c·Σ₂₂/k ≥ 1 ⇔ k ≤ 5.99·Σ₂₂
        assert!(
            wald_region(fit, &zc, 20, p(0.95), 64, RegionMethod::ZhangWald)
                .unwrap()
                .clipped
        );
        assert!(
            !wald_region(fit, &zc, 30, p(0.95), 64, RegionMethod::ZhangWald)
                .unwrap()
                .clipped
        );
        let ml = wald_region(fit, &mc, 20, p(0.95), 64, RegionMethod::MlWald).unwrap();
        assert!(ml.clipped);
        assert!(ml.boundary[0].points.iter().any(|q| q[1] <= 0.0));
        assert!(wald_region(
            fit,
            &Sym2::new(1.0, 1.0, 1.0),
            20,
            p(0.95),
            64,
            RegionMethod::MlWald
        )
        .is_err());
    }
}
