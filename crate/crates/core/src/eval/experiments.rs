//! Experiment harnesses: accuracy against training size, the bound check
//! and label-noise robustness. Every run trains on features computed once
//! per dataset; Monte-Carlo trials use one ChaCha stream per run.

use std::io::Write;

use nalgebra::DVector;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::bounds::{pac_bound, BoundInputs};
use crate::eval::classify::{noiseless_accuracy, stochastic_accuracy, AccuracySummary};
use crate::features::{dataset_basis_means, BasisMeans};
use crate::learn::{empirical_risk, train_on_features, ModelParams, TrainConfig};
use crate::paths::{corruption_indices, Label, LabeledDataset};
use crate::reservoir::ReservoirSystem;
use crate::seeded_rng;

/// Shared settings of all harnesses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSettings {
    pub train: TrainConfig,
    /// Stochastic trials per accuracy point.
    pub trials: usize,
    /// Seed of the Monte-Carlo streams.
    pub sim_seed: u64,
    /// Seed of label corruption.
    pub corruption_seed: u64,
    /// Confidence parameter of the PAC bound.
    pub delta_confidence: f64,
}

impl Default for ExperimentSettings {
    fn default() -> Self {
        Self {
            train: TrainConfig::default(),
            trials: 10,
            sim_seed: 0,
            corruption_seed: 0,
            delta_confidence: 0.01,
        }
    }
}

/// One training run and its evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub experiment: String,
    pub training_size: usize,
    pub noise_scale: f64,
    pub mislabel_fraction: f64,
    pub noiseless_accuracy: f64,
    pub stochastic_min: f64,
    pub stochastic_max: f64,
    pub stochastic_avg: f64,
    pub train_risk: f64,
    pub test_risk: f64,
    pub gap: f64,
    pub b: f64,
    pub bound: Option<f64>,
    pub bound_holds: Option<bool>,
    pub robustness_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub experiment: String,
    pub training_size: usize,
    pub mislabel_fraction: f64,
    pub trial: usize,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub runs: Vec<RunRecord>,
    pub trials: Vec<TrialRecord>,
    /// `max |b|` over the runs; the `Θ` used for bounds.
    pub theta: f64,
    pub radius: Option<f64>,
}

/// Training sizes from `min` to `total` in `steps` roughly even steps.
pub fn size_grid(min: usize, total: usize, steps: usize) -> Vec<usize> {
    if steps <= 1 || total <= min {
        return vec![total];
    }
    let mut grid: Vec<usize> = (0..steps)
        .map(|k| min + ((total - min) as f64 * k as f64 / (steps - 1) as f64).round() as usize)
        .collect();
    grid.dedup();
    grid
}

/// Features and labels of a dataset under one reservoir.
pub struct Prepared {
    pub features: Vec<BasisMeans>,
    pub labels: Vec<Label>,
}

impl Prepared {
    pub fn new(d: &LabeledDataset, sys: &ReservoirSystem) -> Result<Self> {
        Ok(Self {
            features: dataset_basis_means(d, sys)?,
            labels: d.labels().to_vec(),
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn means(&self, params: &ModelParams) -> Vec<DVector<f64>> {
        self.features.iter().map(|f| f.mean(&params.u)).collect()
    }
}

fn run_stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = seeded_rng(seed);
    rng.set_stream(index);
    rng
}

/// Test accuracies of a trained model.
pub fn evaluate_params(
    test: &Prepared,
    params: &ModelParams,
    sys: &ReservoirSystem,
    trials: usize,
    rng: &mut ChaCha8Rng,
) -> Result<(f64, AccuracySummary)> {
    let means = test.means(params);
    let clean = noiseless_accuracy(&means, &test.labels, params)?;
    let stoch = stochastic_accuracy(&means, &test.labels, params, &sys.cov_sqrt, trials, rng)?;
    Ok((clean, stoch))
}

#[allow(clippy::too_many_arguments)]
fn train_and_record(
    experiment: &str,
    train_features: &[BasisMeans],
    train_labels: &[Label],
    test: &Prepared,
    sys: &ReservoirSystem,
    settings: &ExperimentSettings,
    fraction: f64,
    stream: u64,
    trials_out: &mut Vec<TrialRecord>,
) -> Result<RunRecord> {
    let outcome = train_on_features(train_features, train_labels, sys, &settings.train)?;
    let params = outcome.params;
    let mut rng = run_stream(settings.sim_seed, stream);
    let (clean, stoch) = evaluate_params(test, &params, sys, settings.trials, &mut rng)?;
    let train_means: Vec<DVector<f64>> = train_features.iter().map(|f| f.mean(&params.u)).collect();
    let train_risk = empirical_risk(&train_means, train_labels, &params, &sys.cov)?;
    let test_risk = empirical_risk(&test.means(&params), &test.labels, &params, &sys.cov)?;
    let m = train_labels.len();
    for (k, a) in stoch.per_trial.iter().enumerate() {
        trials_out.push(TrialRecord {
            experiment: experiment.into(),
            training_size: m,
            mislabel_fraction: fraction,
            trial: k,
            accuracy: *a,
        });
    }
    Ok(RunRecord {
        experiment: experiment.into(),
        training_size: m,
        noise_scale: sys.spec.map_or(f64::NAN, |s| s.noise_scale),
        mislabel_fraction: fraction,
        noiseless_accuracy: clean,
        stochastic_min: stoch.min,
        stochastic_max: stoch.max,
        stochastic_avg: stoch.avg,
        train_risk,
        test_risk,
        gap: (test_risk - train_risk).abs(),
        b: params.b,
        bound: None,
        bound_holds: None,
        robustness_ratio: None,
    })
}

fn check_grid(grid: &[usize], available: usize) -> Result<()> {
    if grid.is_empty() || grid.iter().any(|&m| m == 0 || m > available) {
        return Err(Error::Domain(format!("training sizes {grid:?} must lie in 1..={available}")));
    }
    Ok(())
}

fn theta_of(runs: &[RunRecord]) -> f64 {
    runs.iter().map(|r| r.b.abs()).fold(0.0, f64::max)
}

/// Trains on the first `m` training examples for each `m` in `grid` and
/// records test accuracies.
pub fn accuracy_experiment(
    train: &Prepared,
    test: &Prepared,
    sys: &ReservoirSystem,
    settings: &ExperimentSettings,
    grid: &[usize],
) -> Result<ExperimentReport> {
    check_grid(grid, train.len())?;
    let mut runs = Vec::new();
    let mut trials = Vec::new();
    for (k, &m) in grid.iter().enumerate() {
        runs.push(train_and_record(
            "accuracy",
            &train.features[..m],
            &train.labels[..m],
            test,
            sys,
            settings,
            0.0,
            k as u64,
            &mut trials,
        )?);
    }
    Ok(ExperimentReport {
        theta: theta_of(&runs),
        runs,
        trials,
        radius: None,
    })
}

/// Accuracy runs plus, per training size, the PAC bound on the observed
/// gap `|R̂_test − R̂_train|`, with `Θ` the largest `|b|` over the runs.
pub fn bound_check_experiment(
    train: &Prepared,
    test: &Prepared,
    sys: &ReservoirSystem,
    settings: &ExperimentSettings,
    grid: &[usize],
    radius: f64,
) -> Result<ExperimentReport> {
    let mut report = accuracy_experiment(train, test, sys, settings, grid)?;
    for run in &mut report.runs {
        run.experiment = "bound".into();
        let bi = BoundInputs {
            theta: report.theta,
            lambda: settings.train.lambda,
            radius,
            m: run.training_size,
            delta: settings.delta_confidence,
            lambda_min: sys.lambda_min,
            exp_norm_int: sys.exp_norm_int,
        };
        let bound = pac_bound(&bi)?;
        run.bound = Some(bound);
        run.bound_holds = Some(run.gap <= bound);
    }
    for t in &mut report.trials {
        t.experiment = "bound".into();
    }
    report.radius = Some(radius);
    Ok(report)
}

/// Retrains on the full training set with a fraction of labels flipped and
/// compares the average stochastic test accuracy with clean training.
pub fn robustness_experiment(
    train: &Prepared,
    test: &Prepared,
    sys: &ReservoirSystem,
    settings: &ExperimentSettings,
    fractions: &[f64],
) -> Result<ExperimentReport> {
    if fractions.iter().any(|f| !(0.0..1.0).contains(f)) {
        return Err(Error::Domain(format!("mislabel fractions {fractions:?} must lie in [0, 1)")));
    }
    if train.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut trials = Vec::new();
    let mut runs = Vec::new();
    let mut clean_avg = None;
    // the clean run uses stream 0 whether or not it is requested
    let mut order: Vec<f64> = vec![0.0];
    order.extend(fractions.iter().copied().filter(|f| *f != 0.0));
    for (k, &fraction) in order.iter().enumerate() {
        let idx = corruption_indices(train.len(), fraction, settings.corruption_seed)?;
        let mut labels = train.labels.clone();
        for i in idx {
            labels[i] = labels[i].flipped();
        }
        let mut scratch = Vec::new();
        let mut run = train_and_record(
            "robustness",
            &train.features,
            &labels,
            test,
            sys,
            settings,
            fraction,
            k as u64,
            &mut scratch,
        )?;
        let base = *clean_avg.get_or_insert(run.stochastic_avg);
        run.robustness_ratio = Some(if base > 0.0 { run.stochastic_avg / base } else { f64::NAN });
        if fraction != 0.0 || fractions.contains(&0.0) {
            runs.push(run);
            trials.extend(scratch);
        }
    }
    Ok(ExperimentReport {
        theta: theta_of(&runs),
        runs,
        trials,
        radius: None,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn write_comment<W: Write>(out: &mut W, comment: Option<&str>) -> std::io::Result<()> {
    if let Some(c) = comment {
        for line in c.lines() {
            writeln!(out, "# {line}")?;
        }
    }
    Ok(())
}

/// One row per run.
pub fn write_runs_csv<W: Write>(report: &ExperimentReport, mut out: W, comment: Option<&str>) -> std::io::Result<()> {
    write_comment(&mut out, comment)?;
    writeln!(
        out,
        "experiment,training_size,noise_scale,mislabel_fraction,noiseless_accuracy,stochastic_min,stochastic_max,stochastic_avg,train_risk,test_risk,gap,bound,bound_holds,robustness_ratio,b"
    )?;
    for r in &report.runs {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.experiment,
            r.training_size,
            r.noise_scale,
            r.mislabel_fraction,
            r.noiseless_accuracy,
            r.stochastic_min,
            r.stochastic_max,
            r.stochastic_avg,
            r.train_risk,
            r.test_risk,
            r.gap,
            opt(r.bound),
            r.bound_holds.map(|b| b.to_string()).unwrap_or_default(),
            opt(r.robustness_ratio),
            r.b
        )?;
    }
    Ok(())
}

/// One row per stochastic trial.
pub fn write_trials_csv<W: Write>(report: &ExperimentReport, mut out: W, comment: Option<&str>) -> std::io::Result<()> {
    write_comment(&mut out, comment)?;
    writeln!(out, "experiment,training_size,mislabel_fraction,trial,accuracy")?;
    for t in &report.trials {
        writeln!(out, "{},{},{},{},{}", t.experiment, t.training_size, t.mislabel_fraction, t.trial, t.accuracy)?;
    }
    Ok(())
}
