//! Declarative experiment configuration (TOML).

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use srnn::learn::TrainConfig;

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum DatasetConfig {
    /// Random trigonometric paths, two classes.
    Synthetic {
        seed: u64,
        samples_per_class: usize,
        samples_per_path: usize,
    },
    /// The `ae.train` / `ae.test` pair, merged before splitting.
    Vowels { train_file: PathBuf, test_file: PathBuf },
    /// A dataset CSV written by `generate`.
    Csv { file: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReservoirConfig {
    pub n: usize,
    pub noise_scale: f64,
    pub connectivity_seed: u64,
    pub noise_seed: u64,
    /// Defaults to the horizon of the dataset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub split_seed: u64,
    pub sim_seed: u64,
    pub corruption_seed: u64,
    #[serde(default = "default_test_fraction")]
    pub test_fraction: f64,
    /// Explicit training sizes; when absent a grid is spread from
    /// `grid_min` to the training-set size in `grid_steps` points.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<usize>>,
    #[serde(default = "default_grid_min")]
    pub grid_min: usize,
    #[serde(default = "default_grid_steps")]
    pub grid_steps: usize,
    #[serde(default = "default_fractions")]
    pub fractions: Vec<f64>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_confidence")]
    pub delta_confidence: f64,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    #[serde(default = "default_sde_dt")]
    pub sde_dt: f64,
    #[serde(default = "default_sde_runs")]
    pub sde_runs: usize,
    /// Index into the test split of the path driven by `simulate-sde`.
    #[serde(default)]
    pub sde_path: usize,
}

fn default_test_fraction() -> f64 {
    0.3
}
fn default_grid_min() -> usize {
    10
}
fn default_grid_steps() -> usize {
    8
}
fn default_fractions() -> Vec<f64> {
    vec![0.0, 0.05, 0.1, 0.15]
}
fn default_trials() -> usize {
    10
}
fn default_confidence() -> f64 {
    0.01
}
fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}
fn default_sde_dt() -> f64 {
    1e-3
}
fn default_sde_runs() -> usize {
    1000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub dataset: DatasetConfig,
    pub reservoir: ReservoirConfig,
    pub train: TrainConfig,
    pub experiment: ExperimentConfig,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
}

impl Config {
    pub fn parse(text: &str, origin: &Path) -> Result<Self, CliError> {
        let table: toml::Table = text.parse().map_err(|e| CliError::parse(origin, e))?;
        // TrainConfig defaults its seed; the config file must not
        let has_train_seed = table
            .get("train")
            .and_then(|t| t.as_table())
            .is_some_and(|t| t.contains_key("seed"));
        if !has_train_seed {
            return Err(CliError::Parse(format!("{}: missing key `train.seed`", origin.display())));
        }
        let cfg: Config = table.try_into().map_err(|e| CliError::parse(origin, e))?;
        cfg.train.validate()?;
        Ok(cfg)
    }

    /// Reads the file and resolves relative data paths against its directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg = Self::parse(&text, path)?;
        let base = path.parent().unwrap_or(Path::new(""));
        match &mut cfg.dataset {
            DatasetConfig::Vowels { train_file, test_file } => {
                *train_file = base.join(&*train_file);
                *test_file = base.join(&*test_file);
            }
            DatasetConfig::Csv { file } => *file = base.join(&*file),
            DatasetConfig::Synthetic { .. } => {}
        }
        Ok(cfg)
    }

    /// `--seed` replaces the training seed and the Monte-Carlo seed; data,
    /// split and reservoir seeds stay as configured.
    pub fn apply(&mut self, o: &Overrides) {
        if let Some(out) = &o.out {
            self.experiment.out_dir = out.clone();
        }
        if let Some(k) = o.trials {
            self.experiment.trials = k;
        }
        if let Some(s) = o.seed {
            self.train.seed = s;
            self.experiment.sim_seed = s;
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable in TOML")
    }
}
