//! Rayon-backed evaluation. Results match the sequential core functions
//! exactly: work is split by index and gathered in order.

use rayon::prelude::*;
use rayon::ThreadPool;

use gpd_elcr_core::regions::{el_statistic, GridSpec};
use gpd_elcr_core::sim::{fold_outcomes, replicate, CoverageConfig, CoveragePlan, CoverageRecord};

use crate::error::CliError;

/// Environment fallback for `--threads`.
pub const THREADS_ENV: &str = "GPD_ELCR_THREADS";

/// `None` lets rayon pick the number of threads.
pub fn thread_pool(threads: Option<usize>) -> Result<ThreadPool, CliError> {
    if threads == Some(0) {
        return Err(CliError::Usage("--threads must be at least 1".into()));
    }
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        b = b.num_threads(t);
    }
    b.build()
        .map_err(|e| CliError::Io(format!("cannot start thread pool: {e}")))
}

pub fn run_coverage(
    config: &CoverageConfig,
    pool: &ThreadPool,
) -> gpd_elcr_core::Result<Vec<CoverageRecord>> {
    let plan = CoveragePlan::new(config.clone())?;
    let rows: Vec<_> = pool.install(|| {
        (0..config.reps)
            .into_par_iter()
            .map(|j| replicate(&plan, j))
            .collect()
    });
    Ok(fold_outcomes(&plan, rows))
}

pub fn grid_values(pool: &ThreadPool, excesses: &[f64], r: f64, grid: &GridSpec) -> Vec<f64> {
    let points = grid.points();
    pool.install(|| {
        points
            .par_iter()
            .map(|&(g, s)| el_statistic(excesses, r, g, s))
            .collect()
    })
}
