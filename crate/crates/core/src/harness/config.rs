//! Experiment and sweep configuration files (TOML).
//!
//! A single experiment:
//!
//! ```toml
//! scheme = "covq-cs"   # comsvq-cs, nnc-cs, msnnc-cs, ssc, ssc-ideal-support
//! n = 12
//! k = 2
//! alpha = 0.75          # or m = 9
//! sigma_w2 = 0.0
//! rate = 12
//! epsilon = 0.0
//! stages = 2            # multi-stage schemes; or stage_rates = [6, 6]
//! n_train = 100000
//! n_eval = 100000
//! seed = 1
//! estimator = "auto"    # exact, omp, oracle
//!
//! [train]
//! max_iters = 100
//! rel_tol = 1e-5
//! delta_split = 1e-3
//! ```
//!
//! A sweep holds `schemes`, an `axis` (`alpha`, `rate` or `epsilon`), the
//! axis `values` and a `[base]` table with every other experiment key.

use serde::{Deserialize, Serialize};

use crate::channel::MAX_RATE;
use crate::covq::TrainConfig;
use crate::error::{config, Error, Result};
use crate::estimators::{EstimatorMode, DEFAULT_ENUMERATION_CAP};
use crate::msvq::split_rate;
use crate::ssc::bit_split;

/// Largest rate of a single VQ stage; a 2^20-entry codebook already needs
/// hundreds of MB of encoder tables at N = 32.
pub const MAX_STAGE_RATE: u32 = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    CovqCs,
    ComsvqCs,
    NncCs,
    MsnncCs,
    Ssc,
    SscIdealSupport,
}

impl Scheme {
    pub const ALL: [Scheme; 6] = [
        Scheme::CovqCs,
        Scheme::ComsvqCs,
        Scheme::NncCs,
        Scheme::MsnncCs,
        Scheme::Ssc,
        Scheme::SscIdealSupport,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::CovqCs => "covq-cs",
            Scheme::ComsvqCs => "comsvq-cs",
            Scheme::NncCs => "nnc-cs",
            Scheme::MsnncCs => "msnnc-cs",
            Scheme::Ssc => "ssc",
            Scheme::SscIdealSupport => "ssc-ideal-support",
        }
    }

    pub fn is_multistage(self) -> bool {
        matches!(self, Scheme::ComsvqCs | Scheme::MsnncCs)
    }

    /// Quantizes measurements rather than source estimates.
    pub fn is_measurement_domain(self) -> bool {
        matches!(self, Scheme::NncCs | Scheme::MsnncCs)
    }

    pub fn is_ssc(self) -> bool {
        matches!(self, Scheme::Ssc | Scheme::SscIdealSupport)
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

fn default_samples() -> usize {
    100_000
}

fn default_stages() -> usize {
    2
}

fn default_cap() -> u64 {
    DEFAULT_ENUMERATION_CAP
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scheme: Scheme,
    pub n: usize,
    pub k: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub sigma_w2: f64,
    pub rate: u32,
    /// Number of stages when `stage_rates` is absent.
    #[serde(default = "default_stages")]
    pub stages: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stage_rates: Option<Vec<u32>>,
    #[serde(default)]
    pub epsilon: f64,
    /// Per-stage crossover probabilities; defaults to `epsilon` everywhere.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stage_epsilons: Option<Vec<f64>>,
    #[serde(default = "default_samples")]
    pub n_train: usize,
    #[serde(default = "default_samples")]
    pub n_eval: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub estimator: EstimatorMode,
    /// Most supports the exact MMSE estimator may enumerate.
    #[serde(default = "default_cap")]
    pub enumeration_cap: u64,
    #[serde(default)]
    pub train: TrainConfig,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Number of measurements; `round(alpha N)` when given as a rate.
    pub fn m(&self) -> usize {
        match (self.m, self.alpha) {
            (Some(m), _) => m,
            (None, Some(a)) => (a * self.n as f64).round() as usize,
            (None, None) => 0,
        }
    }

    /// Per-stage rates; a single entry for single-stage schemes.
    pub fn stage_rates(&self) -> Result<Vec<u32>> {
        if !self.scheme.is_multistage() {
            return Ok(vec![self.rate]);
        }
        match &self.stage_rates {
            Some(r) => Ok(r.clone()),
            None => split_rate(self.rate, self.stages),
        }
    }

    pub fn stage_epsilons(&self) -> Result<Vec<f64>> {
        let stages = self.stage_rates()?.len();
        match &self.stage_epsilons {
            Some(e) if self.scheme.is_multistage() => Ok(e.clone()),
            _ => Ok(vec![self.epsilon; stages]),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.k == 0 || self.k > self.n {
            return config(format!("need 1 <= k <= n, got k = {}, n = {}", self.k, self.n));
        }
        match (self.m, self.alpha) {
            (Some(_), Some(_)) => return config("give either m or alpha, not both"),
            (None, None) => return config("one of m or alpha is required"),
            (None, Some(a)) if !(a > 0.0 && a <= 1.0) => return config(format!("alpha = {a} outside (0, 1]")),
            _ => {}
        }
        let m = self.m();
        if m < self.k || m > self.n {
            return config(format!("need k <= m <= n, got m = {m}"));
        }
        if !(self.sigma_w2 >= 0.0 && self.sigma_w2.is_finite()) {
            return config("sigma_w2 must be finite and non-negative");
        }
        if self.rate == 0 || self.rate > MAX_RATE {
            return config(format!("rate must lie in 1..={MAX_RATE}"));
        }
        if !(0.0..=0.5).contains(&self.epsilon) {
            return config(format!("epsilon = {} outside [0, 0.5]", self.epsilon));
        }
        if self.seed > i64::MAX as u64 {
            return config("seed must fit in a signed 64-bit integer");
        }
        if self.n_train == 0 || self.n_eval == 0 {
            return config("n_train and n_eval must be positive");
        }
        self.train.validate()?;
        if self.estimator == EstimatorMode::Oracle && self.scheme.is_measurement_domain() {
            return config("measurement-domain schemes need a real estimator at the decoder");
        }
        if !self.scheme.is_multistage() && (self.stage_rates.is_some() || self.stage_epsilons.is_some()) {
            return config(format!("stage_rates and stage_epsilons only apply to multi-stage schemes, not {}", self.scheme));
        }
        if self.scheme.is_ssc() {
            bit_split(self.n, self.k, self.rate)?;
            return Ok(());
        }
        let rates = self.stage_rates()?;
        if rates.is_empty() || rates.iter().any(|&r| r == 0 || r > MAX_STAGE_RATE) {
            return config(format!("every stage rate must lie in 1..={MAX_STAGE_RATE}, got {rates:?}"));
        }
        if rates.iter().sum::<u32>() != self.rate {
            return config(format!("stage rates {rates:?} do not sum to rate {}", self.rate));
        }
        let eps = self.stage_epsilons()?;
        if eps.len() != rates.len() || eps.iter().any(|e| !(0.0..=0.5).contains(e)) {
            return config("stage_epsilons needs one value in [0, 0.5] per stage");
        }
        Ok(())
    }

    /// Same experiment on a noiseless channel.
    pub fn noiseless(&self) -> Self {
        Self {
            epsilon: 0.0,
            stage_epsilons: self.stage_epsilons.as_ref().map(|e| vec![0.0; e.len()]),
            ..self.clone()
        }
    }

    pub fn is_noiseless_channel(&self) -> bool {
        self.stage_epsilons().is_ok_and(|e| e.iter().all(|&v| v == 0.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Axis {
    Alpha,
    Rate,
    Epsilon,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub schemes: Vec<Scheme>,
    pub axis: Axis,
    pub values: Vec<f64>,
    pub base: toml::Table,
}

impl SweepConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        if cfg.schemes.is_empty() || cfg.values.is_empty() {
            return config("a sweep needs at least one scheme and one axis value");
        }
        if cfg.base.contains_key("scheme") {
            return config("set schemes at the top level, not in [base]");
        }
        for v in &cfg.values {
            if !v.is_finite() || (cfg.axis == Axis::Rate && (v.fract() != 0.0 || *v < 1.0)) {
                return config(format!("bad {:?} value {v}", cfg.axis));
            }
        }
        Ok(cfg)
    }

    /// Configuration of one grid point. Errors here are per-point failures.
    pub fn point(&self, scheme: Scheme, value: f64) -> Result<ExperimentConfig> {
        let mut t = self.base.clone();
        t.insert("scheme".into(), toml::Value::String(scheme.name().into()));
        match self.axis {
            Axis::Alpha => {
                t.remove("m");
                t.insert("alpha".into(), toml::Value::Float(value));
            }
            Axis::Rate => {
                t.insert("rate".into(), toml::Value::Integer(value as i64));
            }
            Axis::Epsilon => {
                t.insert("epsilon".into(), toml::Value::Float(value));
            }
        }
        // single-stage schemes ignore the multi-stage keys of a shared base
        if !scheme.is_multistage() {
            t.remove("stage_rates");
            t.remove("stage_epsilons");
        }
        let cfg = ExperimentConfig::deserialize(t).map_err(|e| Error::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }
}
