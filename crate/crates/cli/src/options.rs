//! Flag groups shared by the subcommands, and merging with a JSON config file.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::Args;
use rlasso::ensemble::{EnsembleConfig, LambdaRule, Step2Estimator, ThresholdRule};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

/// Fills unset fields of `self` from `file`.
pub trait Layer: Sized + Default + Serialize + DeserializeOwned {
    fn or(self, file: Self) -> Self;

    fn keys() -> Vec<String> {
        match serde_json::to_value(Self::default()) {
            Ok(Value::Object(m)) => m.keys().cloned().collect(),
            _ => Vec::new(),
        }
    }
}

macro_rules! layer {
    ($t:ty { $($f:ident),* $(,)? }) => {
        impl Layer for $t {
            fn or(self, file: Self) -> Self {
                Self { $($f: self.$f.or(file.$f)),* }
            }
        }
    };
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", default)]
pub struct Common {
    /// Master seed; a random one is drawn and recorded when omitted
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (outputs do not depend on this)
    #[arg(long)]
    pub threads: Option<usize>,
    /// Output directory
    #[arg(long)]
    pub out: Option<PathBuf>,
}
layer!(Common { seed, threads, out });

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", default)]
pub struct Simulation {
    /// Simulation example, 1-5
    #[arg(long)]
    pub example: Option<u32>,
    /// Sample size of the training and validation sets
    #[arg(long)]
    pub n: Option<usize>,
    /// Noise standard deviation (defaults to the example's own)
    #[arg(long)]
    pub sigma: Option<f64>,
}
layer!(Simulation { example, n, sigma });

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", default)]
pub struct Ensemble {
    /// Bootstrap samples per step
    #[arg(long)]
    pub b: Option<usize>,
    /// Step-1 subset size (skips tuning of q1)
    #[arg(long)]
    pub q1: Option<usize>,
    /// Step-2 subset size (skips tuning of q2)
    #[arg(long)]
    pub q2: Option<usize>,
    /// Candidate q1 values, comma separated
    #[arg(long)]
    pub q1_grid: Option<String>,
    /// Candidate q2 values, comma separated
    #[arg(long)]
    pub q2_grid: Option<String>,
    /// Step-2 estimator: lasso or adaptive
    #[arg(long)]
    pub step2: Option<String>,
    /// Per-bootstrap lambda: gcv or fixed:<value>
    #[arg(long)]
    pub lambda_rule: Option<String>,
    /// Selection threshold: 1/n or fixed:<value>
    #[arg(long)]
    pub threshold: Option<String>,
    /// Exponent r of the adaptive weights 1/I^r
    #[arg(long)]
    pub adaptive_exponent: Option<f64>,
    /// Top up step-2 subsets with zero-importance predictors
    #[arg(long)]
    pub fill_zero_importance: Option<bool>,
}
layer!(Ensemble { b, q1, q2, q1_grid, q2_grid, step2, lambda_rule, threshold, adaptive_exponent, fill_zero_importance });

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", default)]
pub struct Training {
    /// Training CSV
    #[arg(long)]
    pub train: Option<PathBuf>,
    /// Validation CSV used for tuning; K-fold CV on the training data otherwise
    #[arg(long)]
    pub valid: Option<PathBuf>,
    /// Name of the response column
    #[arg(long)]
    pub response: Option<String>,
    /// Folds for cross-validation when no validation file is given
    #[arg(long)]
    pub folds: Option<usize>,
    /// Scale predictors to unit standard deviation before fitting
    #[arg(long)]
    pub scale: Option<bool>,
}
layer!(Training { train, valid, response, folds, scale });

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", default)]
pub struct Penalty {
    /// Estimator: lasso, adaptive, enet, ridge, ols or random_lasso
    #[arg(long)]
    pub method: Option<String>,
    /// Fixed L1 strength (skips tuning)
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Fixed L2 strength for enet and ridge (skips tuning)
    #[arg(long)]
    pub lambda2: Option<f64>,
}
layer!(Penalty { method, lambda, lambda2 });

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", default)]
pub struct Prediction {
    /// Coefficient CSV written by `fit`
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// CSV with the model's predictor columns
    #[arg(long)]
    pub x: Option<PathBuf>,
}
layer!(Prediction { model, x });

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", default)]
pub struct Bench {
    /// ci (30 replicates, B = 100, halved grids) or full (100 replicates, B = 200)
    #[arg(long)]
    pub preset: Option<String>,
    /// Methods, comma separated (default: all)
    #[arg(long)]
    pub methods: Option<String>,
    /// Override the preset's replicate count
    #[arg(long)]
    pub replicates: Option<usize>,
    /// Scale predictors inside every fit
    #[arg(long)]
    pub scale: Option<bool>,
}
layer!(Bench { preset, methods, replicates, scale });

/// Parsed config file with the keys it supplied.
pub struct ConfigFile {
    map: Map<String, Value>,
}

impl ConfigFile {
    /// Reads a JSON object of options, or the `config` member of a run manifest.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self { map: Map::new() });
        };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let value: Value = serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        let mut map = match value {
            Value::Object(m) => m,
            _ => bail!("config {} must hold a JSON object", path.display()),
        };
        if map.contains_key("command") {
            map = match map.remove("config") {
                Some(Value::Object(m)) => m,
                _ => bail!("manifest {} has no config object", path.display()),
            };
        }
        map.retain(|_, v| !v.is_null());
        Ok(Self { map })
    }

    /// `cli` with gaps filled from the file.
    pub fn layer<T: Layer>(&self, cli: T) -> Result<T> {
        let file: T = serde_json::from_value(Value::Object(self.map.clone())).context("invalid value in config file")?;
        Ok(cli.or(file))
    }

    /// Rejects keys that none of `allowed` understands.
    pub fn check_keys(&self, allowed: &[Vec<String>]) -> Result<()> {
        let known: BTreeSet<&str> = allowed.iter().flatten().map(String::as_str).collect();
        if let Some(k) = self.map.keys().find(|k| !known.contains(k.as_str())) {
            bail!("unknown option '{k}' in config file");
        }
        Ok(())
    }
}

pub fn parse_list(s: &str, what: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|t| t.trim().parse::<usize>().map_err(|_| anyhow!("invalid {what} entry '{t}'")))
        .collect()
}

fn fixed_value(s: &str, what: &str) -> Result<f64> {
    let v = s.strip_prefix("fixed:").ok_or_else(|| anyhow!("invalid {what} '{s}'"))?;
    v.parse().map_err(|_| anyhow!("invalid {what} value '{v}'"))
}

pub fn parse_lambda_rule(s: &str) -> Result<LambdaRule> {
    if s == "gcv" {
        Ok(LambdaRule::GcvPerFit)
    } else {
        Ok(LambdaRule::Fixed(fixed_value(s, "lambda rule (expected gcv or fixed:<v>)")?))
    }
}

pub fn parse_threshold(s: &str) -> Result<ThresholdRule> {
    if s == "1/n" {
        Ok(ThresholdRule::OneOverN)
    } else {
        Ok(ThresholdRule::Fixed(fixed_value(s, "threshold (expected 1/n or fixed:<v>)")?))
    }
}

pub fn parse_step2(s: &str) -> Result<Step2Estimator> {
    match s {
        "lasso" => Ok(Step2Estimator::Lasso),
        "adaptive" | "adaptive_lasso" => Ok(Step2Estimator::AdaptiveLasso),
        _ => bail!("invalid step2 estimator '{s}' (expected lasso or adaptive)"),
    }
}

impl Ensemble {
    /// Applies the set fields to `base`; `q1`/`q2` are left to the caller.
    pub fn apply(&self, mut base: EnsembleConfig) -> Result<EnsembleConfig> {
        if let Some(b) = self.b {
            base.b = b;
        }
        if let Some(s) = &self.step2 {
            base.step2_estimator = parse_step2(s)?;
        }
        if let Some(s) = &self.lambda_rule {
            base.lambda_rule = parse_lambda_rule(s)?;
        }
        if let Some(s) = &self.threshold {
            base.threshold_rule = parse_threshold(s)?;
        }
        if let Some(r) = self.adaptive_exponent {
            base.adaptive_exponent = r;
        }
        if let Some(f) = self.fill_zero_importance {
            base.fill_zero_importance = f;
        }
        Ok(base)
    }
}
