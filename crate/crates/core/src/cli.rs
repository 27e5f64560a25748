//! `nrt` command-line driver.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::forward::{add_noise, response_trace, solve_mixed_bvp, CauchyData, TOL_FLUX};
use crate::reconstruction::{
    classify, intersect_mask, metrics, sweep, ClassifyMethod, Disk, IndicatorResult, DEFAULT_FALLBACK_THRESHOLD,
    EPS_FLOOR,
};
use crate::validate::{run_all, ValidateOptions};

pub const EXIT_VALIDATE_FAILED: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_EMPTY: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "nrt", version, about = "Cavity reconstruction from one Cauchy data pair by the no-response test")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Gap,
    Threshold,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the forward problem and write Cauchy data JSON.
    Synthesize {
        #[arg(long)]
        config: PathBuf,
        /// Defaults to `output.cauchy` in the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate the indicator over the test-disk family and write a CSV.
    Indicate {
        #[arg(long)]
        cauchy: PathBuf,
        #[arg(long)]
        config: PathBuf,
        /// Defaults to `output.indicators` in the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads for the sweep (default: all cores).
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Classify indicators and write the reconstruction mask.
    Reconstruct {
        #[arg(long)]
        indicators: PathBuf,
        #[arg(long, default_value_t = 128)]
        grid: usize,
        /// `gap` (default) or `threshold` (implied by --threshold).
        #[arg(long, value_enum)]
        method: Option<Method>,
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long)]
        out: PathBuf,
        /// Config with the true cavity; enables metrics output.
        #[arg(long)]
        truth: Option<PathBuf>,
        /// Config providing ∂Ω when --truth is not given.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Metrics path (default: mask path with `.metrics.json`).
        #[arg(long)]
        metrics_out: Option<PathBuf>,
    },
    /// Run the oracle, key-identity, flux-balance and homogeneity suites.
    Validate {
        #[arg(long, hide = true)]
        corrupt_weights: bool,
    },
}

/// Error with its process exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Solver(_) => EXIT_SOLVER,
            Error::EmptyAccepted(_) => EXIT_EMPTY,
            _ => EXIT_INVALID,
        };
        CliError { code, message: e.to_string() }
    }
}

type CliResult = std::result::Result<(), CliError>;

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::Invalid(format!("cannot write {}: {e}", path.display())))
}

fn output_path(flag: Option<PathBuf>, configured: Option<&String>, key: &str) -> Result<PathBuf> {
    flag.or_else(|| configured.map(PathBuf::from))
        .ok_or_else(|| Error::Invalid(format!("--out not given and {key} not set in the config")))
}

pub fn synthesize(config: &Path, out: Option<PathBuf>, log: &mut dyn Write) -> CliResult {
    let cfg = RunConfig::load(config)?;
    cfg.validate()?;
    let out = output_path(out, cfg.output.cauchy.as_ref(), "output.cauchy")?;
    let scene = cfg.synthesis_scene()?;
    let f = cfg.measurement.f.sample(scene.outer.params())?;
    let clean = solve_mixed_bvp(&scene, &f)?;
    let data = add_noise(&clean, cfg.measurement.noise, cfg.measurement.seed)?;
    write_file(&out, serde_json::to_string_pretty(&data).map_err(Error::from)?.as_bytes())?;
    let _ = writeln!(
        log,
        "synthesize: {} nodes, noise {}, seed {}, flux residual {:.3e} -> {}",
        data.meta.n_nodes,
        data.meta.noise,
        data.meta.seed,
        data.flux_residual(),
        out.display()
    );
    Ok(())
}

pub fn load_cauchy(path: &Path) -> Result<CauchyData> {
    let text = fs::read_to_string(path).map_err(|e| Error::Invalid(format!("cauchy: cannot read {}: {e}", path.display())))?;
    let data: CauchyData = serde_json::from_str(&text).map_err(|e| Error::Invalid(format!("cauchy: {e}")))?;
    data.validate(TOL_FLUX).map_err(|e| Error::Invalid(format!("cauchy: {e}")))?;
    Ok(data)
}

pub fn indicate(cauchy: &Path, config: &Path, out: Option<PathBuf>, jobs: Option<usize>, log: &mut dyn Write) -> CliResult {
    let data = load_cauchy(cauchy)?;
    let cfg = RunConfig::load(config)?;
    cfg.validate_inversion()?;
    let out = output_path(out, cfg.output.indicators.as_ref(), "output.indicators")?;
    let outer = cfg.inversion_outer()?;
    let length: f64 = data.weights.iter().sum();
    if (length - outer.perimeter()).abs() > 1e-6 * outer.perimeter() {
        return Err(Error::Invalid(format!(
            "scene.outer: perimeter {:.8} does not match the Cauchy data boundary length {length:.8}",
            outer.perimeter()
        ))
        .into());
    }
    let trace = response_trace(&data, &outer)?;
    let sweep_cfg = cfg.sweep_config();
    let truncation = sweep_cfg.effective_truncation(data.meta.noise);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| Error::Invalid(format!("--jobs: {e}")))?;
    let results = pool.install(|| sweep(&trace, &sweep_cfg, &outer, truncation))?;
    write_file(&out, &indicator_csv(&results)?)?;

    let (lo, hi) = results
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), r| (lo.min(r.indicator), hi.max(r.indicator)));
    let _ = writeln!(
        log,
        "indicate: {} disks, truncation {truncation:.1e}, I1 min {lo:.4e} max {hi:.4e}, spread {:.2} decades",
        results.len(),
        ((hi + EPS_FLOOR) / (lo + EPS_FLOOR)).log10()
    );
    if results.len() >= 2 {
        let c = classify(&results, ClassifyMethod::default())?;
        let _ = writeln!(
            log,
            "indicate: largest gap {} -> {} of {} below {:.4e}",
            c.gap_decades.map_or("n/a".into(), |g| format!("{g:.2} decades")),
            c.accepted.len(),
            results.len(),
            c.threshold
        );
    }
    let _ = writeln!(log, "indicate: -> {}", out.display());
    Ok(())
}

pub fn indicator_csv(results: &[IndicatorResult]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in results {
        w.serialize(r).map_err(|e| Error::Invalid(format!("csv: {e}")))?;
    }
    w.into_inner().map_err(|e| Error::Invalid(format!("csv: {e}")))
}

pub fn read_indicator_csv(path: &Path) -> Result<Vec<IndicatorResult>> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::Invalid(format!("indicators: {}: {e}", path.display())))?;
    let rows: std::result::Result<Vec<IndicatorResult>, _> = rdr.deserialize().collect();
    let rows = rows.map_err(|e| Error::Invalid(format!("indicators: {e}")))?;
    if rows.is_empty() {
        return Err(Error::Invalid("indicators: no rows".into()));
    }
    if let Some(r) = rows.iter().find(|r| !(r.indicator >= 0.0) || !(r.radius > 0.0)) {
        return Err(Error::Invalid(format!("indicators: row for domain {} has invalid indicator or radius", r.domain_id)));
    }
    Ok(rows)
}

fn resolve_method(method: Option<Method>, threshold: Option<f64>) -> Result<ClassifyMethod> {
    match (method, threshold) {
        (None | Some(Method::Gap), None) => Ok(ClassifyMethod::LargestGap { fallback_threshold: DEFAULT_FALLBACK_THRESHOLD }),
        (None | Some(Method::Threshold), Some(t)) if t >= 0.0 && t.is_finite() => {
            Ok(ClassifyMethod::FixedThreshold { threshold: t })
        }
        (None | Some(Method::Threshold), Some(t)) => Err(Error::Invalid(format!("--threshold: must be ≥ 0, got {t}"))),
        (Some(Method::Threshold), None) => Err(Error::Invalid("--method threshold requires --threshold".into())),
        (Some(Method::Gap), Some(_)) => Err(Error::Invalid("--threshold conflicts with --method gap".into())),
    }
}

fn default_metrics_path(mask: &Path) -> PathBuf {
    let stem = mask.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "mask".into());
    mask.with_file_name(format!("{stem}.metrics.json"))
}

#[allow(clippy::too_many_arguments)]
pub fn reconstruct(
    indicators: &Path,
    grid: usize,
    method: Option<Method>,
    threshold: Option<f64>,
    out: &Path,
    truth: Option<&Path>,
    config: Option<&Path>,
    metrics_out: Option<PathBuf>,
    log: &mut dyn Write,
) -> CliResult {
    if grid == 0 {
        return Err(Error::Invalid("--grid: must be positive".into()).into());
    }
    let method = resolve_method(method, threshold)?;
    let results = read_indicator_csv(indicators)?;
    let truth_cfg = truth.map(RunConfig::load).transpose()?;
    let domain_cfg = match (config, &truth_cfg) {
        (Some(p), _) => RunConfig::load(p)?,
        (None, Some(t)) => t.clone(),
        (None, None) => return Err(Error::Invalid("--config or --truth is required to define the domain".into()).into()),
    };
    let outer = domain_cfg.inversion_outer()?;
    let classification = classify(&results, method)?;
    if let Some(w) = &classification.warning {
        log::warn!("{w}");
    }
    let accepted: Vec<Disk> = results
        .iter()
        .filter(|r| classification.accepted.contains(&r.domain_id))
        .map(Disk::from)
        .collect();
    let mask = intersect_mask(&accepted, (grid, grid), &outer, classification)?;
    write_file(out, serde_json::to_string_pretty(&mask.to_json()).map_err(Error::from)?.as_bytes())?;
    let _ = writeln!(
        log,
        "reconstruct: {} ({}) accepted {} of {} at I1 ≤ {:.4e}; mask {}x{} with {} pixels, area {:.5} -> {}",
        mask.threshold.method,
        mask.threshold.gap_decades.map_or("-".into(), |g| format!("gap {g:.2} decades")),
        mask.accepted.len(),
        results.len(),
        mask.threshold.threshold,
        grid,
        grid,
        mask.count(),
        mask.area(),
        out.display()
    );
    if let Some(t) = truth_cfg {
        let m = metrics(&mask, &t.cavity()?)?;
        let path = metrics_out.unwrap_or_else(|| default_metrics_path(out));
        write_file(&path, serde_json::to_string_pretty(&m).map_err(Error::from)?.as_bytes())?;
        let _ = writeln!(
            log,
            "reconstruct: jaccard {:.4}, hausdorff {:.4}, area ratio {:.4} -> {}",
            m.jaccard,
            m.hausdorff,
            m.area_ratio,
            path.display()
        );
    }
    Ok(())
}

pub fn validate(corrupt_weights: bool, log: &mut dyn Write) -> CliResult {
    let checks = run_all(ValidateOptions { corrupt_weights })?;
    for c in &checks {
        let _ = writeln!(log, "{c}");
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    let _ = writeln!(log, "validate: {} checks, {failed} failed", checks.len());
    if failed > 0 {
        return Err(CliError { code: EXIT_VALIDATE_FAILED, message: format!("{failed} validation check(s) failed") });
    }
    Ok(())
}

/// Dispatches a parsed command; summaries go to `log`.
pub fn run(cli: Cli, log: &mut dyn Write) -> CliResult {
    match cli.command {
        Command::Synthesize { config, out } => synthesize(&config, out, log),
        Command::Indicate { cauchy, config, out, jobs } => indicate(&cauchy, &config, out, jobs, log),
        Command::Reconstruct { indicators, grid, method, threshold, out, truth, config, metrics_out } => reconstruct(
            &indicators,
            grid,
            method,
            threshold,
            &out,
            truth.as_deref(),
            config.as_deref(),
            metrics_out,
            log,
        ),
        Command::Validate { corrupt_weights } => validate(corrupt_weights, log),
    }
}
