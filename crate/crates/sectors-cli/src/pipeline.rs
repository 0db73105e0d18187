//! Table loading, variance evaluation per point and the record types.

use std::io::Write;
use std::path::{Path, PathBuf};

use gauss_sectors::ideal_stream::{cache_load, cache_store, PrimeTable};
use gauss_sectors::predictions::{
    check_bifurcation, compute_constants, refined_ratio, rmt_ratio, ConstantsBundle, Normalization,
};
use gauss_sectors::spectral::{
    default_k_max, hecke_sums_binned, hecke_sums_weighted, variance_direct, variance_spectral, HeckeSumVector,
    VarianceEstimate, VarianceMethod, WeightedAngles,
};
use gauss_sectors::windows::{pair_by_name, WindowPair};
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, KMaxPolicy, MethodChoice, NormChoice};
use crate::RunError;

/// Above this many term×mode products the binned FFT path is used.
const DIRECT_KERNEL_BUDGET: f64 = 2e10;
const BINNED_ORDER: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CacheStatus {
    Loaded,
    Built,
}

pub fn cache_file(dir: &Path, bound: u64) -> PathBuf {
    dir.join(format!("primes-{bound}.bin"))
}

/// Largest norm the window pair can see at this X.
pub fn norm_bound(cfg: &ExperimentConfig, pair: &WindowPair) -> u64 {
    ((pair.phi.support_cap() * cfg.x as f64).floor() as u64).max(2)
}

/// Smallest cached table covering `bound`, if any.
fn find_cache(dir: &Path, bound: u64) -> Option<(PathBuf, u64)> {
    let exact = cache_file(dir, bound);
    if exact.is_file() {
        return Some((exact, bound));
    }
    let mut best: Option<(PathBuf, u64)> = None;
    for entry in std::fs::read_dir(dir).ok()?.flatten() {
        let name = entry.file_name().to_string_lossy().into_owned();
        let Some(b) = name
            .strip_prefix("primes-")
            .and_then(|s| s.strip_suffix(".bin"))
            .and_then(|s| s.parse::<u64>().ok())
        else {
            continue;
        };
        if b >= bound && best.as_ref().is_none_or(|(_, cur)| b < *cur) {
            best = Some((entry.path(), b));
        }
    }
    best
}

pub fn load_or_build(cfg: &ExperimentConfig, bound: u64) -> Result<(PrimeTable, CacheStatus, PathBuf), RunError> {
    if let Some((path, b)) = find_cache(&cfg.cache_dir, bound) {
        let table = cache_load(&path, b)?;
        return Ok((table, CacheStatus::Loaded, path));
    }
    let path = cache_file(&cfg.cache_dir, bound);
    if !cfg.build_cache {
        return Err(RunError::Resource(format!(
            "no prime cache covering norms ≤ {bound} in {} and build_cache = false",
            cfg.cache_dir.display()
        )));
    }
    let table = PrimeTable::build(bound)?;
    std::fs::create_dir_all(&cfg.cache_dir)?;
    cache_store(&path, &table)?;
    Ok((table, CacheStatus::Built, path))
}

/// Weighted, merged angles for the configured X and window pair.
pub struct Prepared {
    pub pair: WindowPair,
    pub angles: WeightedAngles,
    pub s0: f64,
    pub cache: CacheStatus,
}

pub fn prepare(cfg: &ExperimentConfig) -> Result<Prepared, RunError> {
    let pair = pair_by_name(&cfg.window).map_err(|e| RunError::Config(e.to_string()))?;
    let bound = norm_bound(cfg, &pair);
    let (table, cache, _) = load_or_build(cfg, bound)?;
    let angles = WeightedAngles::from_table(&table, &pair.phi, cfg.x as f64)?;
    drop(table);
    let angles = angles.into_merged();
    let s0 = angles.total_weight();
    Ok(Prepared {
        pair,
        angles,
        s0,
        cache,
    })
}

pub fn k_max_for(cfg: &ExperimentConfig, pair: &WindowPair, k: f64) -> usize {
    match cfg.kmax_policy {
        KMaxPolicy::Default => default_k_max(&pair.f, k),
        KMaxPolicy::Fixed(n) => n,
        KMaxPolicy::Multiple(m) => (m * k).ceil() as usize,
    }
}

/// Method actually used at K: the indicator always sweeps exactly; smooth
/// windows take whichever of pair-sum and mode-sum is cheaper.
pub fn resolve_method(cfg: &ExperimentConfig, prep: &Prepared, k: f64) -> VarianceMethod {
    match cfg.method {
        MethodChoice::Spectral => VarianceMethod::Spectral,
        MethodChoice::Direct => VarianceMethod::Direct,
        MethodChoice::Auto => {
            if prep.pair.f.is_indicator() {
                return VarianceMethod::Direct;
            }
            let n = prep.angles.len() as f64;
            let pair_work = n * n * 4.0 * prep.pair.f.support_radius() / k;
            let mode_work = n * k_max_for(cfg, &prep.pair, k) as f64;
            if pair_work <= mode_work {
                VarianceMethod::Direct
            } else {
                VarianceMethod::Spectral
            }
        }
    }
}

pub fn hecke_sums_for(prep: &Prepared, x: f64, k_max: usize) -> Result<HeckeSumVector, RunError> {
    let work = prep.angles.len() as f64 * k_max as f64;
    if work > DIRECT_KERNEL_BUDGET {
        let bins = (4 * k_max).next_power_of_two();
        Ok(hecke_sums_binned(&prep.angles, x, k_max, bins, BINNED_ORDER)?)
    } else {
        Ok(hecke_sums_weighted(&prep.angles, x, k_max)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointRow {
    /// Achieved λ = log K / log X.
    pub lambda: f64,
    pub k: u64,
    pub var: f64,
    pub var_tail: f64,
    pub mean: f64,
    pub ratio_emp: f64,
    pub ratio_asym: f64,
    pub pred_rmt: f64,
    /// Absent next to a bifurcation unless forced.
    pub pred_refined: Option<f64>,
    pub method: VarianceMethod,
    pub k_max: Option<usize>,
    pub tail_warning: bool,
    pub note: Option<String>,
}

pub const CSV_HEADER: &str = "lambda,K,var,var_tail,mean,ratio_emp,ratio_asym,pred_rmt,pred_refined";

impl PointRow {
    pub fn csv_line(&self) -> String {
        let refined = match self.pred_refined {
            Some(v) => format!("{v:.12e}"),
            None => "nan".into(),
        };
        format!(
            "{:.12},{},{:.12e},{:.6e},{:.12e},{:.12e},{:.12e},{:.12e},{}",
            self.lambda, self.k, self.var, self.var_tail, self.mean, self.ratio_emp, self.ratio_asym, self.pred_rmt, refined
        )
    }
}

pub fn write_rows_csv<W: Write>(mut w: W, rows: &[PointRow]) -> std::io::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(w, "{}", r.csv_line())?;
    }
    Ok(())
}

pub fn normalization(cfg: &ExperimentConfig, s0: f64) -> Normalization {
    match cfg.normalization {
        NormChoice::Asymptotic => Normalization::Asymptotic,
        NormChoice::Empirical => Normalization::Empirical { s0 },
    }
}

/// Evaluate every K. Hecke sums, when needed, are computed once up to the
/// largest k_max among the spectral points.
pub fn evaluate(
    cfg: &ExperimentConfig,
    prep: &Prepared,
    bundle: &ConstantsBundle,
    ks: &[u64],
) -> Result<Vec<PointRow>, RunError> {
    let x = cfg.x as f64;
    let methods: Vec<VarianceMethod> = ks.iter().map(|&k| resolve_method(cfg, prep, k as f64)).collect();
    let spectral_max = ks
        .iter()
        .zip(&methods)
        .filter(|(_, m)| **m == VarianceMethod::Spectral)
        .map(|(&k, _)| k_max_for(cfg, &prep.pair, k as f64))
        .max();
    let sums = match spectral_max {
        Some(km) => Some(hecke_sums_for(prep, x, km)?),
        None => None,
    };
    let norm = normalization(cfg, prep.s0);
    let mut rows = Vec::with_capacity(ks.len());
    for (&k, &method) in ks.iter().zip(&methods) {
        let kf = k as f64;
        let est: VarianceEstimate = match method {
            VarianceMethod::Direct => variance_direct(&prep.angles, &prep.pair.f, kf, x)?,
            VarianceMethod::Spectral => variance_spectral(
                sums.as_ref().expect("sums computed for spectral points"),
                &prep.pair.f,
                kf,
                k_max_for(cfg, &prep.pair, kf),
                cfg.tolerances.variance_rel,
            )?,
        };
        let lambda = kf.ln() / x.ln();
        let (pred_refined, note) = match check_bifurcation(lambda, cfg.force) {
            Ok(()) => (Some(refined_ratio(bundle, x, kf, norm, cfg.force)?), None),
            Err(gauss_sectors::Error::Bifurcation(_)) => {
                (None, Some(format!("λ = {lambda:.6} is next to a bifurcation; refined prediction omitted")))
            }
            Err(e) => return Err(e.into()),
        };
        let mean = prep.pair.f.integral() * prep.s0 / kf;
        rows.push(PointRow {
            lambda,
            k,
            var: est.value,
            var_tail: est.tail_bound,
            mean,
            ratio_emp: est.value / Normalization::Empirical { s0: prep.s0 }.denominator(bundle, x, kf),
            ratio_asym: est.value / Normalization::Asymptotic.denominator(bundle, x, kf),
            pred_rmt: rmt_ratio(bundle, x, kf, norm),
            pred_refined,
            method,
            k_max: est.k_max,
            tail_warning: est.warning,
            note,
        });
    }
    Ok(rows)
}

pub fn constants(cfg: &ExperimentConfig, pair: &WindowPair) -> Result<ConstantsBundle, RunError> {
    Ok(compute_constants(pair, &cfg.constants_options())?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config: ExperimentConfig,
    pub window: String,
    pub x: u64,
    pub term_count: usize,
    pub s0: f64,
    pub constants: ConstantsBundle,
    pub rows: Vec<PointRow>,
}

/// Wall-clock data kept apart from the record so the record is reproducible.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Timing {
    pub command: String,
    pub cache: Option<CacheStatus>,
    pub prepare_seconds: f64,
    pub constants_seconds: f64,
    pub evaluate_seconds: f64,
    pub workers: usize,
}
