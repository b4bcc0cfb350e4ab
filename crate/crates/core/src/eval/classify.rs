use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::dataset_basis_means;
use crate::learn::ModelParams;
use crate::paths::{Label, LabeledDataset};
use crate::reservoir::ReservoirSystem;

/// `sign(⟨ν, ω⟩ + b)` with `sign(0) = +1`.
pub fn classify_noiseless(nu: &DVector<f64>, params: &ModelParams) -> Label {
    Label::from_sign(params.margin(nu))
}

/// Draws `y = ν + A^{1/2} z` and classifies it.
pub fn classify_stochastic<R: Rng + ?Sized>(nu: &DVector<f64>, params: &ModelParams, cov_sqrt: &DMatrix<f64>, rng: &mut R) -> Label {
    let z = DVector::from_fn(nu.len(), |_, _| rng.sample::<f64, _>(StandardNormal));
    let y = nu + cov_sqrt * z;
    classify_noiseless(&y, params)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AccuracyMode {
    Noiseless,
    Stochastic,
}

/// Per-trial accuracies and their spread. Noiseless mode has one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracySummary {
    pub per_trial: Vec<f64>,
    pub min: f64,
    pub max: f64,
    pub avg: f64,
}

impl AccuracySummary {
    pub fn from_trials(per_trial: Vec<f64>) -> Self {
        let min = per_trial.iter().copied().fold(f64::INFINITY, f64::min);
        let max = per_trial.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let avg = per_trial.iter().sum::<f64>() / per_trial.len() as f64;
        Self { per_trial, min, max, avg }
    }
}

fn check(means: &[DVector<f64>], labels: &[Label]) -> Result<()> {
    if means.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if means.len() != labels.len() {
        return Err(Error::Dimension {
            context: "one label per example",
            expected: means.len(),
            got: labels.len(),
        });
    }
    Ok(())
}

/// Fraction of means on the correct side of the hyperplane.
pub fn noiseless_accuracy(means: &[DVector<f64>], labels: &[Label], params: &ModelParams) -> Result<f64> {
    check(means, labels)?;
    let hits = means
        .iter()
        .zip(labels)
        .filter(|(nu, l)| classify_noiseless(nu, params) == **l)
        .count();
    Ok(hits as f64 / means.len() as f64)
}

/// Each trial draws one terminal state per example.
pub fn stochastic_accuracy<R: Rng + ?Sized>(
    means: &[DVector<f64>],
    labels: &[Label],
    params: &ModelParams,
    cov_sqrt: &DMatrix<f64>,
    trials: usize,
    rng: &mut R,
) -> Result<AccuracySummary> {
    check(means, labels)?;
    if trials == 0 {
        return Err(Error::Domain("stochastic accuracy needs at least one trial".into()));
    }
    let per_trial = (0..trials)
        .map(|_| {
            let hits = means
                .iter()
                .zip(labels)
                .filter(|(nu, l)| classify_stochastic(nu, params, cov_sqrt, rng) == **l)
                .count();
            hits as f64 / means.len() as f64
        })
        .collect();
    Ok(AccuracySummary::from_trials(per_trial))
}

/// Accuracy of `params` on a dataset.
pub fn accuracy<R: Rng + ?Sized>(
    d: &LabeledDataset,
    params: &ModelParams,
    sys: &ReservoirSystem,
    mode: AccuracyMode,
    trials: usize,
    rng: &mut R,
) -> Result<AccuracySummary> {
    if d.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let means: Vec<DVector<f64>> = dataset_basis_means(d, sys)?.iter().map(|f| f.mean(&params.u)).collect();
    match mode {
        AccuracyMode::Noiseless => Ok(AccuracySummary::from_trials(vec![noiseless_accuracy(&means, d.labels(), params)?])),
        AccuracyMode::Stochastic => stochastic_accuracy(&means, d.labels(), params, &sys.cov_sqrt, trials, rng),
    }
}
