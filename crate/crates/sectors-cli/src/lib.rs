//! Runner for the sector-variance experiments: `sieve`, `constants`,
//! `point`, `scan`, `verify` and `plotdata`.

pub mod config;
pub mod pipeline;
pub mod svg;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use gauss_sectors::predictions::{ratio_curve, ConstantsBundle, Normalization};
use gauss_sectors::ratios_lab::{run_verification_suite, VerificationReport};
use gauss_sectors::windows::pair_by_name;
use serde::Serialize;

use config::{ConfigError, ExperimentConfig, Points};
use pipeline::{RunRecord, Timing};

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_TOLERANCE: i32 = 3;
pub const EXIT_RESOURCE: i32 = 4;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("tolerance: {0}")]
    Tolerance(String),
    #[error("resource: {0}")]
    Resource(String),
    #[error("numerics: {0}")]
    Numeric(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => EXIT_CONFIG,
            RunError::Tolerance(_) | RunError::Numeric(_) => EXIT_TOLERANCE,
            RunError::Resource(_) => EXIT_RESOURCE,
        }
    }
}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e.to_string())
    }
}

impl From<gauss_sectors::Error> for RunError {
    fn from(e: gauss_sectors::Error) -> Self {
        use gauss_sectors::Error as E;
        match e {
            E::Domain(_) | E::Bifurcation(_) | E::Degenerate(_) => RunError::Config(e.to_string()),
            E::Resource { .. } | E::Cache(_) | E::Io(_) => RunError::Resource(e.to_string()),
            E::Tolerance { .. } | E::Quadrature { .. } | E::Pole(_) | E::Invariant(_) => RunError::Numeric(e.to_string()),
        }
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Resource(e.to_string())
    }
}

impl From<serde_json::Error> for RunError {
    fn from(e: serde_json::Error) -> Self {
        RunError::Resource(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "sectors", about = "Variance of Gaussian prime angles in sectors")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone, Default)]
pub struct Common {
    /// key = value configuration file (schema 1).
    #[arg(long, short)]
    pub config: Option<PathBuf>,
    /// Override one configuration key, e.g. --set x=1000000.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build (or confirm) the prime cache for the configured X.
    Sieve(Common),
    /// Compute the prediction constants.
    Constants(Common),
    /// Evaluate a single point.
    Point {
        #[command(flatten)]
        common: Common,
        #[arg(long, conflicts_with = "k")]
        lambda: Option<f64>,
        #[arg(long)]
        k: Option<u64>,
    },
    /// Evaluate every λ or K in the configuration.
    Scan(Common),
    /// Run the ratios verification suite.
    Verify(Common),
    /// Turn a scan record into plot CSV and optionally SVG.
    Plotdata {
        /// JSON record written by `scan`.
        #[arg(long)]
        record: PathBuf,
        /// Output directory; defaults to the record's directory.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        svg: bool,
    },
}

pub fn load_config(common: &Common) -> Result<ExperimentConfig, RunError> {
    let text = match &common.config {
        Some(p) => fs::read_to_string(p).map_err(|source| ConfigError::Read {
            path: p.clone(),
            source,
        })?,
        None => format!("schema = {}\n", config::SCHEMA),
    };
    Ok(ExperimentConfig::parse(&text, &common.overrides)?)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), RunError> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    fs::write(path, s)?;
    Ok(())
}

fn with_pool<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T, RunError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| RunError::Resource(e.to_string()))?;
    Ok(pool.install(f))
}

/// Dispatch; returns the lines printed to stdout.
pub fn run(cli: Cli) -> Result<Vec<String>, RunError> {
    match cli.command {
        Command::Sieve(c) => {
            let cfg = load_config(&c)?;
            with_pool(cfg.workers, || cmd_sieve(&cfg))?
        }
        Command::Constants(c) => {
            let cfg = load_config(&c)?;
            with_pool(cfg.workers, || cmd_constants(&cfg).map(|(_, lines)| lines))?
        }
        Command::Point { common, lambda, k } => {
            let mut cfg = load_config(&common)?;
            cfg.points = match (lambda, k) {
                (Some(l), None) => Some(Points::Lambdas(vec![l])),
                (None, Some(k)) => Some(Points::Ks(vec![k])),
                _ => cfg.points,
            };
            cfg.validate()?;
            if cfg.k_values().len() != 1 {
                return Err(RunError::Config("point needs exactly one λ or K (--lambda / --k)".into()));
            }
            // a single point near a bifurcation is refused rather than blanked
            let x = cfg.x as f64;
            let kf = cfg.k_values()[0] as f64;
            gauss_sectors::predictions::check_bifurcation(kf.ln() / x.ln(), cfg.force)?;
            with_pool(cfg.workers, || cmd_run(&cfg, "point"))?
        }
        Command::Scan(c) => {
            let cfg = load_config(&c)?;
            if cfg.points.is_none() {
                return Err(RunError::Config("scan needs 'lambdas' or 'ks'".into()));
            }
            with_pool(cfg.workers, || cmd_run(&cfg, "scan"))?
        }
        Command::Verify(c) => {
            let cfg = load_config(&c)?;
            with_pool(cfg.workers, || cmd_verify(&cfg).map(|(_, lines)| lines))?
        }
        Command::Plotdata { record, out, svg } => cmd_plotdata(&record, out.as_deref(), svg),
    }
}

pub fn cmd_sieve(cfg: &ExperimentConfig) -> Result<Vec<String>, RunError> {
    let pair = pair_by_name(&cfg.window).map_err(|e| RunError::Config(e.to_string()))?;
    let bound = pipeline::norm_bound(cfg, &pair);
    let t = Instant::now();
    let (table, status, path) = pipeline::load_or_build(cfg, bound)?;
    Ok(vec![format!(
        "{:?} {} (norms ≤ {}, {} rational primes) in {:.2}s",
        status,
        path.display(),
        table.bound,
        table.triples.len(),
        t.elapsed().as_secs_f64()
    )])
}

pub fn cmd_constants(cfg: &ExperimentConfig) -> Result<(ConstantsBundle, Vec<String>), RunError> {
    let pair = pair_by_name(&cfg.window).map_err(|e| RunError::Config(e.to_string()))?;
    let bundle = pipeline::constants(cfg, &pair)?;
    fs::create_dir_all(&cfg.output_dir)?;
    let mut csv = Vec::new();
    bundle.write_csv(&mut csv)?;
    fs::write(cfg.output_dir.join("constants.csv"), &csv)?;
    write_json(&cfg.output_dir.join("constants.json"), &bundle)?;
    let mut lines: Vec<String> = bundle
        .named()
        .iter()
        .map(|(n, c)| format!("{n:>14} = {:+.12e}  ± {:.1e}", c.value + 0.0, c.error_bound))
        .collect();
    if let Err(e) = bundle.check_identities() {
        return Err(RunError::Tolerance(format!("constant identities: {e}")));
    }
    lines.push("identities ok".into());
    Ok((bundle, lines))
}

/// `point` and `scan`: writes `<name>.csv`, `<name>.json` and `<name>.timing.json`.
pub fn cmd_run(cfg: &ExperimentConfig, name: &str) -> Result<Vec<String>, RunError> {
    let t0 = Instant::now();
    let prep = pipeline::prepare(cfg)?;
    let t1 = Instant::now();
    let bundle = pipeline::constants(cfg, &prep.pair)?;
    let t2 = Instant::now();
    let rows = pipeline::evaluate(cfg, &prep, &bundle, &cfg.k_values())?;
    let t3 = Instant::now();

    fs::create_dir_all(&cfg.output_dir)?;
    let mut csv = Vec::new();
    pipeline::write_rows_csv(&mut csv, &rows)?;
    fs::write(cfg.output_dir.join(format!("{name}.csv")), &csv)?;
    let record = RunRecord {
        config: cfg.clone(),
        window: prep.pair.name.clone(),
        x: cfg.x,
        term_count: prep.angles.len(),
        s0: prep.s0,
        constants: bundle,
        rows,
    };
    write_json(&cfg.output_dir.join(format!("{name}.json")), &record)?;
    let timing = Timing {
        command: name.into(),
        cache: Some(prep.cache),
        prepare_seconds: (t1 - t0).as_secs_f64(),
        constants_seconds: (t2 - t1).as_secs_f64(),
        evaluate_seconds: (t3 - t2).as_secs_f64(),
        workers: cfg.workers,
    };
    write_json(&cfg.output_dir.join(format!("{name}.timing.json")), &timing)?;

    let mut lines = vec![pipeline::CSV_HEADER.to_string()];
    for r in &record.rows {
        lines.push(r.csv_line());
        if let Some(n) = &r.note {
            eprintln!("warning: {n}");
        }
        if r.tail_warning {
            eprintln!("warning: K = {}: tail bound {:.3e} above tol.variance_rel", r.k, r.var_tail);
        }
    }
    Ok(lines)
}

pub fn cmd_verify(cfg: &ExperimentConfig) -> Result<(VerificationReport, Vec<String>), RunError> {
    let report = run_verification_suite(&cfg.verification_options())?;
    fs::create_dir_all(&cfg.output_dir)?;
    write_json(&cfg.output_dir.join("verify.json"), &report)?;
    let lines: Vec<String> = report
        .checks
        .iter()
        .map(|c| {
            format!(
                "{} {:<22} dev {:.3e} tol {:.1e}  {}",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.deviation,
                c.tolerance,
                c.parameters
            )
        })
        .collect();
    if !report.all_passed() {
        for l in &lines {
            println!("{l}");
        }
        return Err(RunError::Tolerance("verification suite has failing checks".into()));
    }
    Ok((report, lines))
}

pub fn cmd_plotdata(record_path: &Path, out: Option<&Path>, svg: bool) -> Result<Vec<String>, RunError> {
    let text = fs::read_to_string(record_path)?;
    let record: RunRecord = serde_json::from_str(&text).map_err(|e| RunError::Config(format!("bad record: {e}")))?;
    let out = out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| record_path.parent().unwrap_or(Path::new(".")).to_path_buf());
    fs::create_dir_all(&out)?;
    let x = record.x as f64;
    let norm = pipeline::normalization(&record.config, record.s0);
    let hi = record.rows.iter().map(|r| r.lambda).fold(1.4f64, f64::max);
    let grid: Vec<f64> = (1..=((hi + 0.05) / 0.005) as usize).map(|i| i as f64 * 0.005).collect();
    let curves = ratio_curve(&record.constants, x, &grid, norm)?;
    let emp: Vec<(f64, f64)> = record
        .rows
        .iter()
        .map(|r| {
            let v = match norm {
                Normalization::Asymptotic => r.ratio_asym,
                Normalization::Empirical { .. } => r.ratio_emp,
            };
            (r.lambda, v)
        })
        .collect();

    let mut csv = String::from("series,lambda,ratio\n");
    for (l, v) in &emp {
        csv += &format!("empirical,{l:.12},{v:.12e}\n");
    }
    for c in &curves {
        for (l, v) in &c.points {
            csv += &format!("{},{l:.6},{v:.12e}\n", c.model.name());
        }
    }
    let csv_path = out.join("plot.csv");
    fs::write(&csv_path, csv)?;
    let mut lines = vec![format!("wrote {}", csv_path.display())];
    if svg {
        let rmt = &curves[0].points;
        let refined = &curves[1].points;
        let title = format!("X = {:e}, {} window, {} mean", x, record.window, norm.label());
        let doc = svg::render(
            &title,
            &[
                svg::Series {
                    label: "RMT",
                    color: "#1f77b4",
                    points: rmt,
                    scatter: false,
                },
                svg::Series {
                    label: "refined",
                    color: "#d62728",
                    points: refined,
                    scatter: false,
                },
                svg::Series {
                    label: "empirical",
                    color: "#222222",
                    points: &emp,
                    scatter: true,
                },
            ],
        );
        let svg_path = out.join("plot.svg");
        fs::write(&svg_path, doc)?;
        lines.push(format!("wrote {}", svg_path.display()));
    }
    Ok(lines)
}

