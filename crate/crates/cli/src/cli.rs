use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use gpd_elcr_core::mle::{mle_cov, mle_fit};
use gpd_elcr_core::models::{extract_excesses, sample, ExcessSample, ModelSpec};
use gpd_elcr_core::profile_ci::{
    el_critical_value, elp_ci_with_critical, elp_critical_value, elw_ci, zhang_wald_ci,
};
use gpd_elcr_core::regions::{
    el_region_with, el_statistic, wald_region, GridSpec, RegionMethod, DEFAULT_GRID_SIZE,
};
use gpd_elcr_core::rng::stream;
use gpd_elcr_core::sim::{parse_k_values, CoverageConfig, Method};
use gpd_elcr_core::statfun::Probability;
use gpd_elcr_core::zhang::{sigma_matrix, zhang_fit};
use gpd_elcr_core::{Calibration, DEFAULT_R};

use crate::error::{exit, CliError};
use crate::input::read_values;
use crate::output;
use crate::parallel::{self, THREADS_ENV};

#[derive(Debug, Parser)]
#[command(
    name = "gpd-elcr",
    version,
    about = "Empirical-likelihood confidence regions for Generalized Pareto tails"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit (γ, σ) to the excesses over the (k+1)-th largest observation.
    Fit(FitArgs),
    /// Confidence region for (γ, σ).
    Region(RegionArgs),
    /// Confidence interval for γ.
    Ci(CiArgs),
    /// Monte-Carlo coverage of regions and intervals.
    Coverage(CoverageArgs),
    /// Critical values of the calibrations.
    Calibrate(CalibrateArgs),
    /// Draw a sample from a model (one value per line).
    Sample(SampleArgs),
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Input file, one number per line (`-` for stdin).
    #[arg(short, long)]
    pub input: PathBuf,
    /// Number of excesses.
    #[arg(short, long)]
    pub k: usize,
    /// Zhang's tuning parameter, r < 1/2.
    #[arg(long, default_value_t = DEFAULT_R, allow_hyphen_values = true)]
    pub r: f64,
    /// Output file (stdout if omitted).
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Also report the maximum-likelihood fit.
    #[arg(long)]
    pub mle: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum CalibrationArg {
    Chi2,
    Fisher,
}

impl From<CalibrationArg> for Calibration {
    fn from(c: CalibrationArg) -> Self {
        match c {
            CalibrationArg::Chi2 => Calibration::Chi2,
            CalibrationArg::Fisher => Calibration::Fisher,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum RegionMethodArg {
    El,
    Zhang,
    Ml,
}

#[derive(Debug, Args)]
pub struct RegionArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_enum, default_value = "el")]
    pub method: RegionMethodArg,
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    #[arg(long, value_enum, default_value = "fisher")]
    pub calibration: CalibrationArg,
    /// Grid nodes per axis.
    #[arg(long, default_value_t = DEFAULT_GRID_SIZE)]
    pub grid: usize,
    /// Grid γ range `lo,hi` (default: MELE ± 4 Wald sd).
    #[arg(long, value_parser = parse_range)]
    pub gamma_range: Option<(f64, f64)>,
    /// Grid σ range `lo,hi`.
    #[arg(long, value_parser = parse_range)]
    pub sigma_range: Option<(f64, f64)>,
    /// Vertices of a Wald ellipse.
    #[arg(long, default_value_t = 256)]
    pub points: usize,
    /// Write the evaluated grid (`gamma,sigma,stat`) to this file.
    #[arg(long)]
    pub dump_grid: Option<PathBuf>,
    #[arg(long, env = THREADS_ENV)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum CiMethodArg {
    Elw,
    Elp,
    Zhang,
}

#[derive(Debug, Args)]
pub struct CiArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_enum, default_value = "elw")]
    pub method: CiMethodArg,
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    /// Calibration of the ELW statistic.
    #[arg(long, value_enum, default_value = "chi2")]
    pub calibration: CalibrationArg,
    /// Exponential samples behind the ELP critical value.
    #[arg(long, default_value_t = 2000)]
    pub calib_reps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct CoverageArgs {
    /// `gpd:γ,σ` | `frechet:γ` | `burr:λ,τ`
    #[arg(long)]
    pub model: String,
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long, default_value_t = 2000)]
    pub reps: usize,
    /// `a:b:step`, `a,b,...` or a single value.
    #[arg(long)]
    pub k: String,
    #[arg(long, default_value = "el,zhang,ml")]
    pub methods: String,
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_R, allow_hyphen_values = true)]
    pub r: f64,
    /// Calibration of the EL region.
    #[arg(long, value_enum, default_value = "fisher")]
    pub calibration: CalibrationArg,
    /// Calibration of the ELW interval.
    #[arg(long, value_enum, default_value = "chi2")]
    pub ci_calibration: CalibrationArg,
    #[arg(long, default_value_t = 2000)]
    pub elp_reps: usize,
    #[arg(long, env = THREADS_ENV)]
    pub threads: Option<usize>,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum CalibrateMethodArg {
    Chi2,
    Fisher,
    Elp,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    #[arg(long, value_enum, default_value = "fisher")]
    pub method: CalibrateMethodArg,
    /// Sample sizes, `a:b:step` or `a,b,...`.
    #[arg(long)]
    pub k: String,
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    /// Dimension of the statistic (chi2/fisher).
    #[arg(long, default_value_t = 2)]
    pub dim: u32,
    /// Monte-Carlo draws (elp).
    #[arg(long, default_value_t = 2000)]
    pub reps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long)]
    pub model: String,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

fn parse_range(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| format!("expected `lo,hi`, got `{s}`"))?;
    let lo = a.trim().parse::<f64>().map_err(|e| e.to_string())?;
    let hi = b.trim().parse::<f64>().map_err(|e| e.to_string())?;
    Ok((lo, hi))
}

fn level(v: f64) -> Result<Probability, CliError> {
    Probability::new(v).map_err(|_| CliError::Usage(format!("level must lie in (0, 1), got {v}")))
}

fn model(s: &str) -> Result<ModelSpec, CliError> {
    s.parse::<ModelSpec>()
        .map_err(|e| CliError::Usage(e.to_string()))
}

fn open_output<'a>(
    path: Option<&Path>,
    stdout: &'a mut dyn Write,
) -> Result<Box<dyn Write + 'a>, CliError> {
    match path {
        Some(p) => {
            let f = File::create(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
            Ok(Box::new(BufWriter::new(f)))
        }
        None => Ok(Box::new(stdout)),
    }
}

fn load(data: &DataArgs) -> Result<(Vec<f64>, ExcessSample), CliError> {
    if data.k < 5 {
        return Err(CliError::Usage(format!(
            "--k must be at least 5, got {}",
            data.k
        )));
    }
    gpd_elcr_core::check_r(data.r)?;
    let values = read_values(&data.input)?;
    if data.k >= values.len() {
        return Err(CliError::Usage(format!(
            "--k must be smaller than the sample size ({} values)",
            values.len()
        )));
    }
    let ex = extract_excesses(&values, data.k)?;
    Ok((values, ex))
}

/// Parses `args` and runs the command. Returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() {
                exit::USAGE
            } else {
                exit::OK
            };
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(stderr, "{text}");
            } else {
                let _ = write!(stdout, "{text}");
            }
            return code;
        }
    };
    match dispatch(cli.command, stdout, stderr) {
        Ok(()) => exit::OK,
        Err(e) => {
            let _ = writeln!(stderr, "gpd-elcr: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cmd: Command, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    match cmd {
        Command::Fit(a) => cmd_fit(&a, stdout),
        Command::Region(a) => cmd_region(&a, stdout, stderr),
        Command::Ci(a) => cmd_ci(&a, stdout),
        Command::Coverage(a) => cmd_coverage(&a, stdout),
        Command::Calibrate(a) => cmd_calibrate(&a, stdout),
        Command::Sample(a) => cmd_sample(&a, stdout),
    }
}

pub fn cmd_fit(a: &FitArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let (values, ex) = load(&a.data)?;
    let fit = zhang_fit(&ex.excesses, a.data.r)?;
    let mle = if a.mle {
        Some(mle_fit(&ex.excesses)?)
    } else {
        None
    };
    let out = open_output(a.data.output.as_deref(), stdout)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "method",
        "gamma",
        "sigma",
        "b",
        "threshold",
        "k",
        "n",
        "converged",
    ])?;
    let row = |m: &str, g: f64, s: f64, conv: bool| {
        [
            m.to_string(),
            g.to_string(),
            s.to_string(),
            (-g / s).to_string(),
            ex.threshold.to_string(),
            ex.k().to_string(),
            values.len().to_string(),
            conv.to_string(),
        ]
    };
    w.write_record(row("zhang", fit.params.gamma, fit.params.sigma, true))?;
    if let Some(m) = mle {
        w.write_record(row("mle", m.params.gamma, m.params.sigma, m.converged))?;
    }
    w.flush()?;
    Ok(())
}

pub fn cmd_region(
    a: &RegionArgs,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<(), CliError> {
    let (_, ex) = load(&a.data)?;
    let ys = &ex.excesses;
    let r = a.data.r;
    let lvl = level(a.level)?;
    let region = match a.method {
        RegionMethodArg::El => {
            let pool = parallel::thread_pool(a.threads)?;
            let grid = match (a.gamma_range, a.sigma_range) {
                (None, None) => {
                    let fit = zhang_fit(ys, r)?;
                    GridSpec::around(fit.params, ys.len(), r, a.grid, 4.0)?
                }
                (g, s) => {
                    let fit = zhang_fit(ys, r)?;
                    let auto = GridSpec::around(fit.params, ys.len(), r, a.grid, 4.0)?;
                    GridSpec::new(
                        g.unwrap_or(auto.gamma_range),
                        s.unwrap_or(auto.sigma_range),
                        a.grid,
                        a.grid,
                    )?
                }
            };
            el_region_with(ys, r, lvl, Some(grid), a.calibration.into(), |g| {
                parallel::grid_values(&pool, ys, r, g)
            })?
        }
        RegionMethodArg::Zhang => {
            let fit = zhang_fit(ys, r)?;
            let cov = sigma_matrix(fit.params.gamma, r)?;
            wald_region(
                fit.params,
                &cov,
                ys.len(),
                lvl,
                a.points,
                RegionMethod::ZhangWald,
            )?
        }
        RegionMethodArg::Ml => {
            let fit = mle_fit(ys)?;
            if !fit.converged {
                return Err(CliError::Estimation(
                    gpd_elcr_core::Error::EstimationFailure(
                        "maximum likelihood did not converge".into(),
                    ),
                ));
            }
            let cov = mle_cov(fit.params.gamma)?;
            wald_region(
                fit.params,
                &cov,
                ys.len(),
                lvl,
                a.points,
                RegionMethod::MlWald,
            )?
        }
    };
    {
        let out = open_output(a.data.output.as_deref(), stdout)?;
        output::write_region(out, &region)?;
    }
    if let (Some(path), Some(grid)) = (&a.dump_grid, &region.grid) {
        let f = File::create(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        output::write_grid(BufWriter::new(f), grid, &region.values)?;
    }
    // self-check: every traced vertex back on the level set
    let c = region.critical_value;
    let worst = region
        .boundary
        .iter()
        .flat_map(|l| l.points.iter())
        .map(|p| match region.method {
            RegionMethod::El => el_statistic(ys, r, p[0], p[1]),
            _ => region.statistic(p[0], p[1]),
        })
        .map(|l| (l - c).abs() / c)
        .fold(0.0_f64, f64::max);
    let _ = writeln!(
        stderr,
        "{}: center=({}, {}) c={c} polylines={} vertices={} clipped={} expansions={} max|l-c|/c={worst:.3e}",
        region.method.name(),
        region.center.gamma,
        region.center.sigma,
        region.boundary.len(),
        region.vertex_count(),
        region.clipped,
        region.expansions,
    );
    Ok(())
}

pub fn cmd_ci(a: &CiArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let (values, ex) = load(&a.data)?;
    let lvl = level(a.level)?;
    let (ci, calibration) = match a.method {
        CiMethodArg::Elw => {
            let cal: Calibration = a.calibration.into();
            (
                elw_ci(&ex.excesses, a.data.r, lvl, cal)?,
                cal.name().to_string(),
            )
        }
        CiMethodArg::Elp => {
            if a.calib_reps == 0 {
                return Err(CliError::Usage("--calib-reps must be at least 1".into()));
            }
            let c = elp_critical_value(a.data.k, lvl, a.calib_reps, a.seed)?;
            (
                elp_ci_with_critical(&values, a.data.k, lvl, c)?,
                format!("exp:{}", a.calib_reps),
            )
        }
        CiMethodArg::Zhang => (zhang_wald_ci(&ex.excesses, a.data.r, lvl)?, "normal".into()),
    };
    {
        let out = open_output(a.data.output.as_deref(), stdout)?;
        output::write_interval(out, &ci, &calibration)?;
    }
    match (ci.lo_open, ci.hi_open) {
        (true, true) => Err(CliError::OpenInterval("lower and upper")),
        (true, false) => Err(CliError::OpenInterval("lower")),
        (false, true) => Err(CliError::OpenInterval("upper")),
        (false, false) => Ok(()),
    }
}

pub fn cmd_coverage(a: &CoverageArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let spec = model(&a.model)?;
    let ks = parse_k_values(&a.k)?;
    let methods = a
        .methods
        .split(',')
        .map(|m| m.parse::<Method>())
        .collect::<gpd_elcr_core::Result<Vec<_>>>()?;
    if a.reps == 0 {
        return Err(CliError::Usage("--reps must be at least 1".into()));
    }
    let mut config = CoverageConfig::new(spec, a.n, a.reps, ks, methods, level(a.level)?, a.seed);
    config.r = a.r;
    config.region_calibration = a.calibration.into();
    config.ci_calibration = a.ci_calibration.into();
    config.elp_calibration_reps = a.elp_reps;
    let pool = parallel::thread_pool(a.threads)?;
    let records = parallel::run_coverage(&config, &pool)?;
    let out = open_output(a.output.as_deref(), stdout)?;
    output::write_coverage(out, &records)
}

pub fn cmd_calibrate(a: &CalibrateArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let ks = parse_k_values(&a.k)?;
    let lvl = level(a.level)?;
    let out = open_output(a.output.as_deref(), stdout)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["method", "k", "level", "dim", "critical_value"])?;
    for k in ks {
        let (name, dim, c) = match a.method {
            CalibrateMethodArg::Chi2 => (
                "chi2",
                a.dim,
                el_critical_value(k, lvl, a.dim, Calibration::Chi2)?,
            ),
            CalibrateMethodArg::Fisher => (
                "fisher",
                a.dim,
                el_critical_value(k, lvl, a.dim, Calibration::Fisher)?,
            ),
            CalibrateMethodArg::Elp => ("elp", 1, elp_critical_value(k, lvl, a.reps, a.seed)?),
        };
        w.write_record([
            name.to_string(),
            k.to_string(),
            lvl.get().to_string(),
            dim.to_string(),
            c.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn cmd_sample(a: &SampleArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let spec = model(&a.model)?;
    let xs = sample(&spec, a.n, &mut stream(a.seed, 0));
    let mut out = open_output(a.output.as_deref(), stdout)?;
    writeln!(out, "# {spec} n={} seed={}", a.n, a.seed)?;
    for x in xs {
        writeln!(out, "{x}")?;
    }
    out.flush()?;
    Ok(())
}
