//! CSV writers.

use std::io::Write;

use gpd_elcr_core::contour::Polyline;
use gpd_elcr_core::profile_ci::ConfidenceInterval;
use gpd_elcr_core::regions::{ConfidenceRegion, GridSpec};
use gpd_elcr_core::sim::CoverageRecord;

use crate::error::CliError;

pub const COVERAGE_HEADER: [&str; 10] = [
    "model",
    "n",
    "k",
    "method",
    "level",
    "calibration",
    "reps",
    "valid",
    "failures",
    "coverage",
];

fn fmt_coverage(c: f64) -> String {
    if c.is_nan() {
        "NaN".into()
    } else {
        format!("{c:.6}")
    }
}

pub fn write_coverage<W: Write>(out: W, records: &[CoverageRecord]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(COVERAGE_HEADER)?;
    for r in records {
        w.write_record([
            r.model.to_string(),
            r.n.to_string(),
            r.k.to_string(),
            r.method.to_string(),
            r.level.get().to_string(),
            r.calibration.to_string(),
            r.reps.to_string(),
            r.valid_reps.to_string(),
            r.failures.to_string(),
            fmt_coverage(r.coverage),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Region summary section followed by the boundary vertices.
pub fn write_region<W: Write>(out: W, region: &ConfidenceRegion) -> Result<(), CliError> {
    let mut w = csv::WriterBuilder::new().flexible(true).from_writer(out);
    w.write_record([
        "method",
        "level",
        "critical_value",
        "gamma_hat",
        "sigma_hat",
        "clipped",
    ])?;
    w.write_record([
        region.method.name().to_string(),
        region.level.get().to_string(),
        region.critical_value.to_string(),
        region.center.gamma.to_string(),
        region.center.sigma.to_string(),
        region.clipped.to_string(),
    ])?;
    write_polylines(&mut w, &region.boundary)?;
    w.flush()?;
    Ok(())
}

fn write_polylines<W: Write>(w: &mut csv::Writer<W>, lines: &[Polyline]) -> Result<(), CliError> {
    w.write_record(["polyline_id", "vertex_id", "gamma", "sigma"])?;
    for (pid, line) in lines.iter().enumerate() {
        for (vid, p) in line.points.iter().enumerate() {
            w.write_record([
                pid.to_string(),
                vid.to_string(),
                p[0].to_string(),
                p[1].to_string(),
            ])?;
        }
    }
    Ok(())
}

pub fn write_grid<W: Write>(out: W, grid: &GridSpec, values: &[f64]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["gamma", "sigma", "stat"])?;
    for ((g, s), v) in grid.points().into_iter().zip(values) {
        w.write_record([g.to_string(), s.to_string(), v.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_interval<W: Write>(
    out: W,
    ci: &ConfidenceInterval,
    calibration: &str,
) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "method",
        "level",
        "estimate",
        "lo",
        "hi",
        "width",
        "critical_value",
        "calibration",
        "lo_open",
        "hi_open",
        "converged",
    ])?;
    w.write_record([
        ci.method.name().to_string(),
        ci.level.get().to_string(),
        ci.estimate.to_string(),
        ci.lo.to_string(),
        ci.hi.to_string(),
        ci.width().to_string(),
        ci.critical_value.to_string(),
        calibration.to_string(),
        ci.lo_open.to_string(),
        ci.hi_open.to_string(),
        ci.converged.to_string(),
    ])?;
    w.flush()?;
    Ok(())
}

/// Reads back the `polyline_id,vertex_id,gamma,sigma` rows of a region file.
pub fn read_region_vertices(text: &str) -> Vec<(usize, usize, f64, f64)> {
    let mut out = Vec::new();
    let mut in_vertices = false;
    for line in text.lines() {
        if line.starts_with("polyline_id,") {
            in_vertices = true;
            continue;
        }
        if !in_vertices {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if let [p, v, g, s] = f.as_slice() {
            if let (Ok(p), Ok(v), Ok(g), Ok(s)) = (p.parse(), v.parse(), g.parse(), s.parse()) {
                out.push((p, v, g, s));
            }
        }
    }
    out
}
