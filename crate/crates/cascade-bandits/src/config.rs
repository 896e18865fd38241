//! Flat key-value experiment configuration.
//!
//! The file is a TOML document without tables. Every key can be overridden on
//! the command line with `--set key=value`, where the value uses TOML syntax
//! (bare words are taken as strings).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnvKind {
    /// Nested Beta-prior protocol (or a fixed `Beta(1,10)` prior in the sweep).
    Bernoulli,
    Linear,
    Logistic,
    /// Instance JSON files, for example from `ingest`.
    Instances,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeedbackKind {
    Bernoulli,
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrefactorKind {
    SigmaSq,
    Sigma,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub env: EnvKind,
    /// Instance file or directory of instance files (`env = "instances"`).
    pub instances: Option<PathBuf>,
    pub max_instances: Option<usize>,

    #[serde(rename = "L")]
    pub num_items: usize,
    #[serde(rename = "K")]
    pub list_len: usize,
    #[serde(rename = "T")]
    pub horizon: u64,
    pub d: usize,
    pub lambda: f64,
    /// Parameter-norm bound.
    #[serde(rename = "S")]
    pub norm_bound: f64,
    /// Sub-Gaussian variance proxy in the confidence radius.
    pub sigma_sq: f64,
    /// Base confidence; `1/(T (ln T + 2))` when unset.
    pub delta: Option<f64>,
    pub radius_prefactor: PrefactorKind,

    /// Per run for synthetic kinds, per instance for `instances`.
    pub replications: usize,
    pub seed: u64,
    pub log_every: u64,
    pub algorithms: Vec<String>,
    /// Instances drawn per outer prior in the nested Bernoulli protocol.
    pub n_inner: usize,

    pub prior_mean: f64,
    pub prior_var: f64,
    /// Click noise variance assumed by `gts`.
    pub noise_var: f64,
    pub refit_every: u64,
    pub newton_step: f64,
    pub linucb_c: Option<f64>,

    pub feedback: FeedbackKind,
    pub feedback_noise_var: f64,
    pub feedback_threshold: f64,
    pub redraw: bool,

    pub sweep: Vec<u32>,
    #[serde(rename = "sweep_T")]
    pub sweep_horizon: u64,

    pub output: PathBuf,
    pub plot_data: Option<PathBuf>,
    pub svg: Option<PathBuf>,
    /// 0 uses every available core.
    pub threads: usize,
    pub strict: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            env: EnvKind::Bernoulli,
            instances: None,
            max_instances: None,
            num_items: 30,
            list_len: 3,
            horizon: 10_000,
            d: 5,
            lambda: 1e-4,
            norm_bound: 1.0,
            sigma_sq: DEFAULT_SIGMA_SQ,
            delta: None,
            radius_prefactor: PrefactorKind::SigmaSq,
            replications: 100,
            seed: 1,
            log_every: 100,
            algorithms: vec!["gts".into(), "ts-beta".into()],
            n_inner: 20,
            prior_mean: 0.0,
            prior_var: 1.0,
            noise_var: DEFAULT_SIGMA_SQ,
            refit_every: 1,
            newton_step: 1.0,
            linucb_c: None,
            feedback: FeedbackKind::Bernoulli,
            feedback_noise_var: 0.01,
            feedback_threshold: 0.5,
            redraw: false,
            sweep: (0..=8).collect(),
            sweep_horizon: 1000,
            output: PathBuf::from("results.csv"),
            plot_data: None,
            svg: None,
            threads: 0,
            strict: false,
        }
    }
}

/// Variance proxy of a `[0,1]`-bounded click: `1/4`.
pub const DEFAULT_SIGMA_SQ: f64 = 0.25;

/// Keys that do not change simulated numbers and are left out of the hash.
const NON_SEMANTIC_KEYS: &[&str] = &["output", "plot_data", "svg", "threads", "strict"];

impl ExperimentConfig {
    pub fn from_toml_str(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| HarnessError::Config(e.to_string()))?;
        for item in overrides {
            let (key, value) = parse_override(item)?;
            table.insert(key, value);
        }
        let cfg: Self = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_toml_str(&text, overrides)
    }

    pub fn with_overrides(overrides: &[String]) -> Result<Self> {
        Self::from_toml_str("", overrides)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(HarnessError::Config(msg.to_string()));
        if self.list_len == 0 || self.num_items < self.list_len {
            return bad("need 1 <= K <= L");
        }
        if self.horizon == 0 || self.log_every == 0 || self.replications == 0 {
            return bad("T, log_every and replications must be positive");
        }
        if self.algorithms.is_empty() {
            return bad("no algorithms configured");
        }
        for name in &self.algorithms {
            if !crate::experiment::is_known_algorithm(name) {
                return Err(HarnessError::Config(format!("unknown algorithm '{name}'")));
            }
        }
        if self.env == EnvKind::Instances && self.instances.is_none() {
            return bad("env = \"instances\" needs an `instances` path");
        }
        if matches!(self.env, EnvKind::Linear | EnvKind::Logistic) && self.d == 0 {
            return bad("d must be positive for contextual environments");
        }
        if self.n_inner == 0 {
            return bad("n_inner must be positive");
        }
        if !(self.lambda > 0.0 && self.sigma_sq > 0.0 && self.norm_bound > 0.0) {
            return bad("lambda, sigma_sq and S must be positive");
        }
        if let Some(d) = self.delta {
            if !(d > 0.0 && d < 1.0) {
                return bad("delta must lie in (0, 1)");
            }
        }
        if self.refit_every == 0 {
            return bad("refit_every must be positive");
        }
        if self.sweep.iter().any(|&c| c > cascade_bandits_core::envgen::MAX_SHIFT) {
            return bad("sweep values must lie in [0, 8]");
        }
        Ok(())
    }

    /// Base confidence, defaulting to the horizon-tuned value.
    pub fn delta_for(&self, horizon: u64) -> f64 {
        self.delta
            .unwrap_or_else(|| cascade_bandits_core::policies::default_delta(horizon))
    }

    /// SHA-256 over the semantic fields.
    pub fn hash(&self) -> String {
        let mut value = serde_json::to_value(self).expect("config serializes");
        if let Some(map) = value.as_object_mut() {
            for key in NON_SEMANTIC_KEYS {
                map.remove(*key);
            }
        }
        // serde_json maps are sorted, so this text is canonical
        let text = serde_json::to_string(&value).expect("config serializes");
        let digest = Sha256::digest(text.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn threads(&self) -> usize {
        if let Some(n) = std::env::var("CASCADE_BANDITS_THREADS")
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
        {
            return n.max(1);
        }
        if self.threads == 0 {
            std::thread::available_parallelism().map_or(1, |n| n.get())
        } else {
            self.threads
        }
    }
}

fn parse_override(item: &str) -> Result<(String, toml::Value)> {
    let (key, raw) = item
        .split_once('=')
        .ok_or_else(|| HarnessError::Usage(format!("--set expects key=value, got '{item}'")))?;
    let key = key.trim();
    if key.is_empty() {
        return Err(HarnessError::Usage(format!("--set expects key=value, got '{item}'")));
    }
    let raw = raw.trim();
    let value = format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    Ok((key.to_string(), value))
}
