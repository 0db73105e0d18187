//! `key = value` experiment configuration, schema revision 1.
//!
//! ```text
//! schema = 1
//! x = 1000000
//! lambdas = 0.25, 0.5, 0.75
//! window = indicator
//! tol.variance_rel = 1e-6
//! ```
//!
//! Blank lines and `#` comments are ignored. Unknown keys are rejected.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use gauss_sectors::predictions::{ConstantsMethod, ConstantsOptions};
use gauss_sectors::ratios_lab::VerificationOptions;
use serde::{Deserialize, Serialize};

pub const SCHEMA: u32 = 1;
pub const CACHE_ENV: &str = "SECTORS_CACHE_DIR";

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("key '{key}': {msg}")]
    Value { key: String, msg: String },
    #[error("{0}")]
    Invalid(String),
    #[error("reading {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Points {
    Lambdas(Vec<f64>),
    Ks(Vec<u64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum KMaxPolicy {
    /// max(10⁵, 1000K) for the indicator, 8K for smooth f.
    Default,
    Fixed(usize),
    /// k_max = ⌈m·K⌉.
    Multiple(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MethodChoice {
    Auto,
    Spectral,
    Direct,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NormChoice {
    Asymptotic,
    Empirical,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Tail bound relative to the variance above which a point is flagged.
    pub variance_rel: f64,
    pub constants_abs: f64,
    pub delta: f64,
    pub gamma_halving: f64,
    pub lemma: f64,
    pub derivative: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        let v = VerificationOptions::default();
        Self {
            variance_rel: 1e-6,
            constants_abs: ConstantsOptions::default().abs_tol,
            delta: v.delta_tol,
            gamma_halving: v.gamma_halving_tol,
            lemma: v.lemma_tol,
            derivative: v.derivative_tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub schema: u32,
    pub x: u64,
    pub points: Option<Points>,
    pub window: String,
    pub kmax_policy: KMaxPolicy,
    pub method: MethodChoice,
    pub normalization: NormChoice,
    pub workers: usize,
    pub tolerances: Tolerances,
    pub cache_dir: PathBuf,
    /// Build the prime table when no cache file exists.
    pub build_cache: bool,
    pub output_dir: PathBuf,
    /// Evaluate the refined model next to λ = 1/2, 1.
    pub force: bool,
    pub constants_method: ConstantsMethod,
    pub p_max: u64,
    pub t_cut: Option<f64>,
    pub k_avg: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            schema: SCHEMA,
            x: 100_000,
            points: None,
            window: "indicator".into(),
            kmax_policy: KMaxPolicy::Default,
            method: MethodChoice::Auto,
            normalization: NormChoice::Asymptotic,
            workers: 1,
            tolerances: Tolerances::default(),
            cache_dir: PathBuf::from("sectors-cache"),
            build_cache: true,
            output_dir: PathBuf::from("sectors-out"),
            force: false,
            constants_method: ConstantsMethod::DirichletSeries,
            p_max: ConstantsOptions::default().p_max,
            t_cut: None,
            k_avg: VerificationOptions::default().k_avg,
        }
    }
}

fn value_err(key: &str, msg: impl Into<String>) -> ConfigError {
    ConfigError::Value {
        key: key.into(),
        msg: msg.into(),
    }
}

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, ConfigError> {
    v.parse().map_err(|_| value_err(key, format!("cannot parse '{v}'")))
}

fn list<T: std::str::FromStr>(key: &str, v: &str) -> Result<Vec<T>, ConfigError> {
    v.split(',').map(|s| num(key, s.trim())).collect()
}

fn boolean(key: &str, v: &str) -> Result<bool, ConfigError> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(value_err(key, format!("expected true/false, got '{v}'"))),
    }
}

/// Parse `x` allowing `1e6` style as long as the value is an exact integer.
fn integer(key: &str, v: &str) -> Result<u64, ConfigError> {
    if let Ok(n) = v.parse::<u64>() {
        return Ok(n);
    }
    let f: f64 = num(key, v)?;
    if f.fract() == 0.0 && f >= 0.0 && f < 1.8e19 {
        Ok(f as u64)
    } else {
        Err(value_err(key, format!("expected a non-negative integer, got '{v}'")))
    }
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text, &[])
    }

    /// Parse text, then apply `overrides` (each `key=value`), then the cache
    /// environment variable, then validate.
    pub fn parse(text: &str, overrides: &[String]) -> Result<Self, ConfigError> {
        let mut entries: BTreeMap<String, (usize, String)> = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or(ConfigError::Syntax {
                line: i + 1,
                msg: format!("expected key = value, got '{line}'"),
            })?;
            let k = k.trim().to_string();
            if entries.insert(k.clone(), (i + 1, v.trim().to_string())).is_some() {
                return Err(ConfigError::Syntax {
                    line: i + 1,
                    msg: format!("duplicate key '{k}'"),
                });
            }
        }
        match entries.get("schema") {
            None => return Err(ConfigError::Invalid("missing 'schema' key".into())),
            Some((_, v)) if v.parse::<u32>().ok() != Some(SCHEMA) => {
                return Err(value_err("schema", format!("unsupported schema '{v}', expected {SCHEMA}")))
            }
            _ => {}
        }
        for o in overrides {
            let (k, v) = o
                .split_once('=')
                .ok_or_else(|| ConfigError::Invalid(format!("override '{o}' is not key=value")))?;
            entries.insert(k.trim().to_string(), (0, v.trim().to_string()));
        }
        let mut c = ExperimentConfig::default();
        let mut lambdas = None;
        let mut ks = None;
        for (k, (_, v)) in &entries {
            let v = v.as_str();
            match k.as_str() {
                "schema" => {}
                "x" => c.x = integer(k, v)?,
                "lambdas" => lambdas = Some(list::<f64>(k, v)?),
                "ks" => ks = Some(v.split(',').map(|s| integer(k, s.trim())).collect::<Result<Vec<_>, _>>()?),
                "window" => c.window = v.to_string(),
                "kmax_policy" => {
                    c.kmax_policy = match v.split_once(':') {
                        None if v == "default" => KMaxPolicy::Default,
                        Some(("fixed", n)) => KMaxPolicy::Fixed(integer(k, n)? as usize),
                        Some(("multiple", m)) => KMaxPolicy::Multiple(num(k, m)?),
                        _ => return Err(value_err(k, "expected default | fixed:N | multiple:M")),
                    }
                }
                "method" => {
                    c.method = match v {
                        "auto" => MethodChoice::Auto,
                        "spectral" => MethodChoice::Spectral,
                        "direct" => MethodChoice::Direct,
                        _ => return Err(value_err(k, "expected auto | spectral | direct")),
                    }
                }
                "normalization" => {
                    c.normalization = match v {
                        "asymptotic" => NormChoice::Asymptotic,
                        "empirical" => NormChoice::Empirical,
                        _ => return Err(value_err(k, "expected asymptotic | empirical")),
                    }
                }
                "workers" => c.workers = num(k, v)?,
                "cache" => c.cache_dir = PathBuf::from(v),
                "build_cache" => c.build_cache = boolean(k, v)?,
                "output" => c.output_dir = PathBuf::from(v),
                "force" => c.force = boolean(k, v)?,
                "constants_method" => {
                    c.constants_method = match v {
                        "series" => ConstantsMethod::DirichletSeries,
                        "line" => ConstantsMethod::LineIntegral,
                        _ => return Err(value_err(k, "expected series | line")),
                    }
                }
                "p_max" => c.p_max = integer(k, v)?,
                "t_cut" => c.t_cut = Some(num(k, v)?),
                "k_avg" => c.k_avg = integer(k, v)?,
                "tol.variance_rel" => c.tolerances.variance_rel = num(k, v)?,
                "tol.constants_abs" => c.tolerances.constants_abs = num(k, v)?,
                "tol.delta" => c.tolerances.delta = num(k, v)?,
                "tol.gamma_halving" => c.tolerances.gamma_halving = num(k, v)?,
                "tol.lemma" => c.tolerances.lemma = num(k, v)?,
                "tol.derivative" => c.tolerances.derivative = num(k, v)?,
                other => return Err(ConfigError::Invalid(format!("unknown key '{other}'"))),
            }
        }
        c.points = match (lambdas, ks) {
            (Some(_), Some(_)) => return Err(ConfigError::Invalid("give exactly one of 'lambdas' and 'ks'".into())),
            (Some(l), None) => Some(Points::Lambdas(l)),
            (None, Some(k)) => Some(Points::Ks(k)),
            (None, None) => None,
        };
        if let Some(dir) = std::env::var_os(CACHE_ENV) {
            if !dir.is_empty() {
                c.cache_dir = PathBuf::from(dir);
            }
        }
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.x < 1000 {
            return Err(value_err("x", format!("X must be at least 1000, got {}", self.x)));
        }
        if self.workers == 0 {
            return Err(value_err("workers", "must be at least 1"));
        }
        let t = &self.tolerances;
        for (name, v) in [
            ("tol.variance_rel", t.variance_rel),
            ("tol.constants_abs", t.constants_abs),
            ("tol.delta", t.delta),
            ("tol.gamma_halving", t.gamma_halving),
            ("tol.lemma", t.lemma),
            ("tol.derivative", t.derivative),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(value_err(name, "tolerances must be positive"));
            }
        }
        match &self.points {
            Some(Points::Lambdas(l)) if l.iter().any(|v| !(v.is_finite() && *v > 0.0)) => {
                return Err(value_err("lambdas", "values must be positive"))
            }
            Some(Points::Ks(k)) if k.iter().any(|&v| v < 2) => return Err(value_err("ks", "values must be at least 2")),
            Some(Points::Lambdas(l)) if l.is_empty() => return Err(value_err("lambdas", "empty list")),
            _ => {}
        }
        if let KMaxPolicy::Fixed(0) = self.kmax_policy {
            return Err(value_err("kmax_policy", "fixed k_max must be positive"));
        }
        if let KMaxPolicy::Multiple(m) = self.kmax_policy {
            if !(m > 0.0) {
                return Err(value_err("kmax_policy", "multiple must be positive"));
            }
        }
        if self.t_cut.is_some_and(|t| !(t > 0.0)) {
            return Err(value_err("t_cut", "must be positive"));
        }
        if self.p_max < 100 {
            return Err(value_err("p_max", "must be at least 100"));
        }
        Ok(())
    }

    /// K values in ascending order; each λ maps to K = round(X^λ).
    pub fn k_values(&self) -> Vec<u64> {
        let x = self.x as f64;
        let mut ks: Vec<u64> = match &self.points {
            None => Vec::new(),
            Some(Points::Ks(k)) => k.clone(),
            Some(Points::Lambdas(l)) => l.iter().map(|&l| x.powf(l).round().max(2.0) as u64).collect(),
        };
        ks.sort_unstable();
        ks.dedup();
        ks
    }

    pub fn constants_options(&self) -> ConstantsOptions {
        ConstantsOptions {
            method: self.constants_method,
            t_cut: self.t_cut,
            p_max: self.p_max,
            abs_tol: self.tolerances.constants_abs,
        }
    }

    pub fn verification_options(&self) -> VerificationOptions {
        VerificationOptions {
            k_avg: self.k_avg,
            delta_tol: self.tolerances.delta,
            gamma_halving_tol: self.tolerances.gamma_halving,
            lemma_tol: self.tolerances.lemma,
            derivative_tol: self.tolerances.derivative,
            ..VerificationOptions::default()
        }
    }

    /// Canonical text form; parsing it back yields the same config.
    pub fn to_text(&self) -> String {
        let mut s = format!("schema = {}\nx = {}\n", self.schema, self.x);
        match &self.points {
            Some(Points::Lambdas(l)) => {
                let v: Vec<String> = l.iter().map(|x| x.to_string()).collect();
                s += &format!("lambdas = {}\n", v.join(", "));
            }
            Some(Points::Ks(k)) => {
                let v: Vec<String> = k.iter().map(|x| x.to_string()).collect();
                s += &format!("ks = {}\n", v.join(", "));
            }
            None => {}
        }
        s += &format!("window = {}\n", self.window);
        s += &format!(
            "kmax_policy = {}\n",
            match self.kmax_policy {
                KMaxPolicy::Default => "default".to_string(),
                KMaxPolicy::Fixed(n) => format!("fixed:{n}"),
                KMaxPolicy::Multiple(m) => format!("multiple:{m}"),
            }
        );
        s += &format!(
            "method = {}\n",
            match self.method {
                MethodChoice::Auto => "auto",
                MethodChoice::Spectral => "spectral",
                MethodChoice::Direct => "direct",
            }
        );
        s += &format!(
            "normalization = {}\n",
            match self.normalization {
                NormChoice::Asymptotic => "asymptotic",
                NormChoice::Empirical => "empirical",
            }
        );
        s += &format!("workers = {}\n", self.workers);
        s += &format!("cache = {}\n", self.cache_dir.display());
        s += &format!("build_cache = {}\n", self.build_cache);
        s += &format!("output = {}\n", self.output_dir.display());
        s += &format!("force = {}\n", self.force);
        s += &format!(
            "constants_method = {}\n",
            match self.constants_method {
                ConstantsMethod::DirichletSeries => "series",
                ConstantsMethod::LineIntegral => "line",
            }
        );
        s += &format!("p_max = {}\n", self.p_max);
        if let Some(t) = self.t_cut {
            s += &format!("t_cut = {t}\n");
        }
        s += &format!("k_avg = {}\n", self.k_avg);
        let t = &self.tolerances;
        s += &format!("tol.variance_rel = {:e}\n", t.variance_rel);
        s += &format!("tol.constants_abs = {:e}\n", t.constants_abs);
        s += &format!("tol.delta = {:e}\n", t.delta);
        s += &format!("tol.gamma_halving = {:e}\n", t.gamma_halving);
        s += &format!("tol.lemma = {:e}\n", t.lemma);
        s += &format!("tol.derivative = {:e}\n", t.derivative);
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal() {
        let c = ExperimentConfig::parse("schema = 1\nx = 1e5\nlambdas = 0.5, 0.25\n", &[]).unwrap();
        assert_eq!(c.x, 100_000);
        assert_eq!(c.k_values(), vec![18, 316]);
    }

    #[test]
    fn both_lists_rejected() {
        let e = ExperimentConfig::parse("schema = 1\nlambdas = 0.5\nks = 8\n", &[]);
        assert!(matches!(e, Err(ConfigError::Invalid(_))));
    }

    #[test]
    fn schema_required() {
        assert!(ExperimentConfig::parse("x = 10000\n", &[]).is_err());
        assert!(ExperimentConfig::parse("schema = 2\n", &[]).is_err());
    }

    #[test]
    fn text_round_trip() {
        let mut c = ExperimentConfig::parse("schema = 1\nks = 8, 32\nkmax_policy = multiple:4\nt_cut = 30\n", &[]).unwrap();
        c.cache_dir = "c".into();
        let back = ExperimentConfig::parse(&c.to_text(), &[]).unwrap();
        let mut back = back;
        back.cache_dir = "c".into();
        assert_eq!(back, c);
    }
}
