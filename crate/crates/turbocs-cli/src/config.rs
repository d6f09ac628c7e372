//! Config-file parsing and option resolution.
//!
//! Config files are plain `key = value` lines with `#` comments. Keys match
//! the CLI flags in snake_case. Flags given on the command line win over the
//! file; anything still unset falls back to the built-in defaults.

use std::num::NonZeroUsize;
use std::path::{Path, PathBuf};
use std::thread;

use crate::experiment::Algorithm;
use crate::{HarnessError, Result};

pub const DEFAULT_N: usize = 4096;
pub const DEFAULT_M: usize = 2867;
pub const DEFAULT_LAMBDA: f64 = 0.4;
pub const DEFAULT_SNR_DB: f64 = 50.0;
pub const DEFAULT_TRIALS: usize = 200;
pub const DEFAULT_MAX_ITERS: usize = 50;
pub const DEFAULT_REL_TOL: f64 = 1e-6;
pub const DEFAULT_SEED: u64 = 1;

/// Options with every field optional, so file and CLI layers can be merged
/// before defaults are applied.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PartialConfig {
    pub n: Option<usize>,
    pub m: Option<usize>,
    pub lambda: Option<f64>,
    pub snr_db: Option<f64>,
    pub trials: Option<usize>,
    pub max_iters: Option<usize>,
    pub rel_tol: Option<f64>,
    pub seed: Option<u64>,
    pub algo: Option<Algorithm>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
}

/// Fully resolved options after merging and defaulting.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedConfig {
    pub n: usize,
    pub m: usize,
    pub lambda: f64,
    pub snr_db: f64,
    pub trials: usize,
    pub max_iters: usize,
    pub rel_tol: f64,
    pub seed: u64,
    pub algo: Algorithm,
    pub out: Option<PathBuf>,
    pub threads: usize,
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value
        .parse::<T>()
        .map_err(|e| HarnessError::Config(format!("config key {key}: bad value {value:?}: {e}")))
}

/// Parses a config file. Unreadable files are I/O errors (exit 2); syntax
/// and unknown-key problems are config errors (exit 1).
pub fn parse_config_file(path: &Path) -> Result<PartialConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
    parse_config_text(&text)
}

pub fn parse_config_text(text: &str) -> Result<PartialConfig> {
    let mut cfg = PartialConfig::default();
    for (idx, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            HarnessError::Config(format!("config line {}: expected key = value", idx + 1))
        })?;
        let key = key.trim();
        let value = value.trim();
        match key {
            "n" => cfg.n = Some(parse_value(key, value)?),
            "m" => cfg.m = Some(parse_value(key, value)?),
            "lambda" => cfg.lambda = Some(parse_value(key, value)?),
            "snr_db" => cfg.snr_db = Some(parse_value(key, value)?),
            "trials" => cfg.trials = Some(parse_value(key, value)?),
            "max_iters" => cfg.max_iters = Some(parse_value(key, value)?),
            "rel_tol" => cfg.rel_tol = Some(parse_value(key, value)?),
            "seed" => cfg.seed = Some(parse_value(key, value)?),
            "algo" => {
                cfg.algo = Some(Algorithm::parse(value).ok_or_else(|| {
                    HarnessError::Config(format!("config key algo: unknown algorithm {value:?}"))
                })?)
            }
            "out" => cfg.out = Some(PathBuf::from(value)),
            "threads" => cfg.threads = Some(parse_value(key, value)?),
            _ => {
                return Err(HarnessError::Config(format!(
                    "config line {}: unknown key {key:?}",
                    idx + 1
                )))
            }
        }
    }
    Ok(cfg)
}

/// Merges two layers; fields set in `primary` shadow `fallback`.
pub fn merge(primary: PartialConfig, fallback: PartialConfig) -> PartialConfig {
    PartialConfig {
        n: primary.n.or(fallback.n),
        m: primary.m.or(fallback.m),
        lambda: primary.lambda.or(fallback.lambda),
        snr_db: primary.snr_db.or(fallback.snr_db),
        trials: primary.trials.or(fallback.trials),
        max_iters: primary.max_iters.or(fallback.max_iters),
        rel_tol: primary.rel_tol.or(fallback.rel_tol),
        seed: primary.seed.or(fallback.seed),
        algo: primary.algo.or(fallback.algo),
        out: primary.out.or(fallback.out),
        threads: primary.threads.or(fallback.threads),
    }
}

fn default_threads() -> usize {
    thread::available_parallelism().map_or(1, NonZeroUsize::get)
}

/// Fills unset fields with the built-in defaults.
pub fn resolve(cfg: PartialConfig) -> ResolvedConfig {
    ResolvedConfig {
        n: cfg.n.unwrap_or(DEFAULT_N),
        m: cfg.m.unwrap_or(DEFAULT_M),
        lambda: cfg.lambda.unwrap_or(DEFAULT_LAMBDA),
        snr_db: cfg.snr_db.unwrap_or(DEFAULT_SNR_DB),
        trials: cfg.trials.unwrap_or(DEFAULT_TRIALS),
        max_iters: cfg.max_iters.unwrap_or(DEFAULT_MAX_ITERS),
        rel_tol: cfg.rel_tol.unwrap_or(DEFAULT_REL_TOL),
        seed: cfg.seed.unwrap_or(DEFAULT_SEED),
        algo: cfg.algo.unwrap_or(Algorithm::Turbo),
        out: cfg.out,
        threads: cfg.threads.unwrap_or_else(default_threads),
    }
}
