use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use srnn::dataset_io::{load_dataset_csv, save_dataset_csv};
use srnn::eval::{
    accuracy_experiment, bound_check_experiment, noiseless_accuracy, robustness_experiment, simulate_terminal_states,
    size_grid, write_runs_csv, write_trials_csv, ExperimentReport, ExperimentSettings, Prepared,
};
use srnn::features::{compute_mean, dataset_basis_means};
use srnn::learn::{erm_train, truncated_erm_train, ModelParams};
use srnn::paths::{dataset_radius, PathNorm};
use srnn::synthetic::gen_trig_dataset;
use srnn::vowels::load_japanese_vowels;
use srnn::{seeded_rng, LabeledDataset, ReservoirSpec, ReservoirSystem};

use crate::config::{Config, DatasetConfig};
use crate::error::CliError;

type Result<T> = std::result::Result<T, CliError>;

/// Which risk was minimised.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Objective {
    Direct,
    Truncated { order: usize },
}

/// Contents of `model.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub params: ModelParams,
    pub reservoir: ReservoirSpec,
    pub objective: Objective,
    pub final_risk: f64,
    pub training_size: usize,
    pub restart_risks: Vec<f64>,
    pub config: Config,
}

impl ModelFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::parse(path, e))
    }
}

#[derive(Serialize)]
struct ReportFile<'a> {
    experiment: &'a str,
    lambda_min: f64,
    exp_norm_int: f64,
    #[serde(flatten)]
    report: &'a ExperimentReport,
    config: &'a Config,
}

#[derive(Serialize)]
struct SdeSummary<'a> {
    model: &'a Path,
    path_index: usize,
    label: f64,
    dt: f64,
    runs: usize,
    exact_mean: Vec<f64>,
    empirical_mean: Vec<f64>,
    /// `max_i |ȳ_i − ν_i| / sqrt(A_ii / runs)`.
    max_mean_z: f64,
    /// `‖Ĉ − A‖_F / ‖A‖_F` for the sample covariance `Ĉ`.
    covariance_rel_error: f64,
    config: &'a Config,
}

/// The full dataset named by the config.
pub fn load_dataset(cfg: &Config) -> Result<LabeledDataset> {
    Ok(match &cfg.dataset {
        DatasetConfig::Synthetic {
            seed,
            samples_per_class,
            samples_per_path,
        } => gen_trig_dataset(*seed, *samples_per_class, *samples_per_path)?,
        DatasetConfig::Vowels { train_file, test_file } => {
            for f in [train_file, test_file] {
                if !f.is_file() {
                    return Err(CliError::Io(format!("vowels file not found: {}", f.display())));
                }
            }
            let (train, test) = load_japanese_vowels(train_file, test_file)?;
            train.concat(&test)?
        }
        DatasetConfig::Csv { file } => load_dataset_csv(file)?,
    })
}

pub fn build_system(cfg: &Config, d: &LabeledDataset) -> Result<ReservoirSystem> {
    let r = d.dim().ok_or(srnn::Error::EmptyDataset)?;
    let horizon = match cfg.reservoir.horizon {
        Some(t) => t,
        None => d.horizon().ok_or(srnn::Error::EmptyDataset)?,
    };
    Ok(ReservoirSystem::build(ReservoirSpec {
        n: cfg.reservoir.n,
        r,
        horizon,
        noise_scale: cfg.reservoir.noise_scale,
        connectivity_seed: cfg.reservoir.connectivity_seed,
        noise_seed: cfg.reservoir.noise_seed,
    })?)
}

fn split(cfg: &Config, d: &LabeledDataset) -> Result<(LabeledDataset, LabeledDataset)> {
    Ok(d.stratified_split(cfg.experiment.test_fraction, cfg.experiment.split_seed)?)
}

fn out_dir(cfg: &Config) -> Result<PathBuf> {
    let dir = cfg.experiment.out_dir.clone();
    fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    Ok(dir)
}

fn write_with<F>(path: &Path, f: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
{
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = BufWriter::new(file);
    f(&mut w).and_then(|_| w.flush()).map_err(|e| CliError::io(path, e))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Other(e.to_string()))?;
    write_with(path, |w| writeln!(w, "{text}"))
}

pub fn generate(cfg: &Config) -> Result<()> {
    let d = load_dataset(cfg)?;
    let path = out_dir(cfg)?.join("dataset.csv");
    save_dataset_csv(&d, &path, Some(&cfg.to_toml()))?;
    println!("wrote {} paths to {}", d.len(), path.display());
    Ok(())
}

pub fn train(cfg: &Config, truncated: Option<usize>) -> Result<()> {
    let d = load_dataset(cfg)?;
    let sys = build_system(cfg, &d)?;
    let (train, test) = split(cfg, &d)?;
    let outcome = match truncated {
        Some(order) => truncated_erm_train(&train, &sys, &cfg.train, order)?,
        None => erm_train(&train, &sys, &cfg.train)?,
    };
    let dir = out_dir(cfg)?;
    let model = ModelFile {
        params: outcome.params.clone(),
        reservoir: sys.spec.expect("built from a spec"),
        objective: truncated.map_or(Objective::Direct, |order| Objective::Truncated { order }),
        final_risk: outcome.risk,
        training_size: train.len(),
        restart_risks: outcome.restarts.iter().map(|r| r.risk).collect(),
        config: cfg.clone(),
    };
    write_json(&dir.join("model.json"), &model)?;
    let comment = cfg.to_toml();
    write_with(&dir.join("trace.csv"), |w| {
        for line in comment.lines() {
            writeln!(w, "# {line}")?;
        }
        writeln!(w, "iteration,risk")?;
        for (k, r) in outcome.risk_trace.iter().enumerate() {
            writeln!(w, "{k},{r}")?;
        }
        Ok(())
    })?;

    let test_means: Vec<DVector<f64>> = dataset_basis_means(&test, &sys)?.iter().map(|f| f.mean(&outcome.params.u)).collect();
    let acc = noiseless_accuracy(&test_means, test.labels(), &outcome.params)?;
    println!(
        "final risk {:.6e} over {} paths; noiseless test accuracy {:.2}%",
        outcome.risk,
        train.len(),
        100.0 * acc
    );
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Accuracy,
    Bound,
    Robustness,
}

impl Experiment {
    fn name(self) -> &'static str {
        match self {
            Experiment::Accuracy => "accuracy",
            Experiment::Bound => "bound",
            Experiment::Robustness => "robustness",
        }
    }
}

pub fn experiment(cfg: &Config, which: Experiment) -> Result<()> {
    let d = load_dataset(cfg)?;
    let sys = build_system(cfg, &d)?;
    if !sys.is_definite() {
        return Err(CliError::Regime(format!(
            "covariance is not positive definite (smallest eigenvalue {:e})",
            sys.lambda_min
        )));
    }
    let (train, test) = split(cfg, &d)?;
    let tr = Prepared::new(&train, &sys)?;
    let te = Prepared::new(&test, &sys)?;
    let e = &cfg.experiment;
    let settings = ExperimentSettings {
        train: cfg.train,
        trials: e.trials,
        sim_seed: e.sim_seed,
        corruption_seed: e.corruption_seed,
        delta_confidence: e.delta_confidence,
    };
    let grid = e
        .grid
        .clone()
        .unwrap_or_else(|| size_grid(e.grid_min, train.len(), e.grid_steps));
    let report = match which {
        Experiment::Accuracy => accuracy_experiment(&tr, &te, &sys, &settings, &grid)?,
        Experiment::Bound => {
            let radius = dataset_radius(&d, PathNorm::L2)?;
            bound_check_experiment(&tr, &te, &sys, &settings, &grid, radius)?
        }
        Experiment::Robustness => robustness_experiment(&tr, &te, &sys, &settings, &e.fractions)?,
    };

    let dir = out_dir(cfg)?;
    let name = which.name();
    let comment = cfg.to_toml();
    write_with(&dir.join(format!("{name}_runs.csv")), |w| write_runs_csv(&report, w, Some(&comment)))?;
    write_with(&dir.join(format!("{name}_trials.csv")), |w| write_trials_csv(&report, w, Some(&comment)))?;
    write_json(
        &dir.join(format!("{name}_report.json")),
        &ReportFile {
            experiment: name,
            lambda_min: sys.lambda_min,
            exp_norm_int: sys.exp_norm_int,
            report: &report,
            config: cfg,
        },
    )?;

    for r in &report.runs {
        let mut line = format!(
            "m={:<4} flip={:<5} noiseless={:6.2}% stochastic avg={:6.2}% [{:6.2}%, {:6.2}%] gap={:.3e}",
            r.training_size,
            r.mislabel_fraction,
            100.0 * r.noiseless_accuracy,
            100.0 * r.stochastic_avg,
            100.0 * r.stochastic_min,
            100.0 * r.stochastic_max,
            r.gap
        );
        if let Some(b) = r.bound {
            line.push_str(&format!(" bound={b:.3e}"));
        }
        if let Some(q) = r.robustness_ratio {
            line.push_str(&format!(" ratio={:.2}%", 100.0 * q));
        }
        println!("{line}");
    }
    Ok(())
}

pub fn simulate(cfg: &Config, model_path: &Path) -> Result<()> {
    let model = ModelFile::load(model_path)?;
    let sys = ReservoirSystem::build(model.reservoir)?;
    let d = load_dataset(cfg)?;
    let (_, test) = split(cfg, &d)?;
    let e = &cfg.experiment;
    let x = test.paths().get(e.sde_path).ok_or_else(|| {
        CliError::Other(format!("sde_path {} is out of range for {} test paths", e.sde_path, test.len()))
    })?;
    if e.sde_runs < 2 {
        return Err(CliError::Other("sde_runs must be at least 2".into()));
    }
    let u = &model.params.u;
    let nu = compute_mean(x, u, &sys)?.value;
    let mut rng = seeded_rng(e.sim_seed);
    let states = simulate_terminal_states(x, u, &sys, e.sde_dt, e.sde_runs, &mut rng)?;

    let count = states.len() as f64;
    let mean = states.iter().fold(DVector::zeros(sys.n), |acc, y| acc + y) / count;
    let mut cov = nalgebra::DMatrix::zeros(sys.n, sys.n);
    for y in &states {
        let c = y - &mean;
        cov += &c * c.transpose();
    }
    cov /= count - 1.0;
    let max_mean_z = (0..sys.n)
        .map(|i| (mean[i] - nu[i]).abs() / (sys.cov[(i, i)] / count).sqrt())
        .fold(0.0, f64::max);

    let dir = out_dir(cfg)?;
    let comment = cfg.to_toml();
    write_with(&dir.join("sde_states.csv"), |w| {
        for line in comment.lines() {
            writeln!(w, "# {line}")?;
        }
        write!(w, "run")?;
        for i in 1..=sys.n {
            write!(w, ",y_{i}")?;
        }
        writeln!(w)?;
        for (k, y) in states.iter().enumerate() {
            write!(w, "{k}")?;
            for v in y.iter() {
                write!(w, ",{v}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    })?;
    let summary = SdeSummary {
        model: model_path,
        path_index: e.sde_path,
        label: test.labels()[e.sde_path].value(),
        dt: e.sde_dt,
        runs: e.sde_runs,
        exact_mean: nu.iter().copied().collect(),
        empirical_mean: mean.iter().copied().collect(),
        max_mean_z,
        covariance_rel_error: (&cov - &sys.cov).norm() / sys.cov.norm(),
        config: cfg,
    };
    write_json(&dir.join("sde_summary.json"), &summary)?;
    println!(
        "{} runs: max mean deviation {:.2} standard errors, covariance relative error {:.3}",
        e.sde_runs, summary.max_mean_z, summary.covariance_rel_error
    );
    Ok(())
}
