//! Projected-gradient empirical risk minimisation with random restarts.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{dataset_basis_means, partial_signature, truncated_basis_means, w0_powers, BasisMeans};
use crate::learn::loss::{risk, risk_and_gradient, Gradient, ModelParams};
use crate::linalg::project_spectral_ball;
use crate::paths::{Label, LabeledDataset};
use crate::reservoir::ReservoirSystem;
use crate::seeded_rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    /// Radius of the spectral-norm ball for `u`.
    pub lambda: f64,
    /// Optional bound on `|b|`; `None` leaves `b` free.
    pub theta: Option<f64>,
    pub restarts: usize,
    pub max_iters: usize,
    pub initial_step: f64,
    /// Step growth after an accepted step.
    pub step_growth: f64,
    /// Step shrink after a rejected step.
    pub step_shrink: f64,
    /// Sufficient-decrease constant of the line search.
    pub armijo: f64,
    /// Stop once an accepted step lowers the risk by less than `tol · risk`.
    pub tol: f64,
    pub min_step: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            theta: None,
            restarts: 5,
            max_iters: 1000,
            initial_step: 1.0,
            step_growth: 1.5,
            step_shrink: 0.5,
            armijo: 1e-4,
            tol: 1e-9,
            min_step: 1e-12,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(Error::Domain("restarts must be at least 1".into()));
        }
        if !(self.lambda > 0.0) {
            return Err(Error::Domain(format!("lambda must be positive, got {}", self.lambda)));
        }
        if let Some(t) = self.theta {
            if !(t >= 0.0) {
                return Err(Error::Domain(format!("theta must be nonnegative, got {t}")));
            }
        }
        if !(self.initial_step > 0.0 && self.step_growth >= 1.0 && self.step_shrink > 0.0 && self.step_shrink < 1.0) {
            return Err(Error::Domain("invalid step-size parameters".into()));
        }
        Ok(())
    }
}

/// Result of one restart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestartResult {
    pub params: ModelParams,
    pub risk: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainOutcome {
    pub params: ModelParams,
    pub risk: f64,
    /// Risk after initialisation and after every accepted step of the winning restart.
    pub risk_trace: Vec<f64>,
    pub restarts: Vec<RestartResult>,
}

/// Projects onto the feasible set: `‖u‖ ≤ Λ`, `‖ω‖ = 1`, `|b| ≤ Θ`. Scaling
/// `(ω, b)` together leaves every loss unchanged.
pub fn project(params: ModelParams, cfg: &TrainConfig) -> Result<ModelParams> {
    let u = project_spectral_ball(&params.u, cfg.lambda);
    let norm = params.omega.norm();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::Numerical("read-out direction collapsed to zero".into()));
    }
    let omega = params.omega / norm;
    let mut b = params.b / norm;
    if let Some(t) = cfg.theta {
        b = b.clamp(-t, t);
    }
    Ok(ModelParams { u, omega, b })
}

/// Random starting point: uniform `u` entries, `ω` uniform on the sphere, `b = 0`.
pub fn random_init<R: Rng + ?Sized>(n: usize, r: usize, cfg: &TrainConfig, rng: &mut R) -> Result<ModelParams> {
    let half = 1.0 / ((n * r) as f64).sqrt();
    let u = DMatrix::from_fn(n, r, |_, _| rng.random_range(-half..half));
    let omega = DVector::from_fn(n, |_, _| StandardNormal.sample(rng));
    project(ModelParams { u, omega, b: 0.0 }, cfg)
}

fn step(p: &ModelParams, g: &Gradient, eta: f64) -> ModelParams {
    ModelParams {
        u: &p.u - &g.u * eta,
        omega: &p.omega - &g.omega * eta,
        b: p.b - g.b * eta,
    }
}

fn inner(g: &Gradient, from: &ModelParams, to: &ModelParams) -> f64 {
    g.u.dot(&(&to.u - &from.u)) + g.omega.dot(&(&to.omega - &from.omega)) + g.b * (to.b - from.b)
}

fn descend(
    features: &[BasisMeans],
    labels: &[Label],
    cov: &DMatrix<f64>,
    cfg: &TrainConfig,
    start: ModelParams,
) -> Result<(ModelParams, f64, Vec<f64>, usize)> {
    let mut params = start;
    let (mut current, mut grad) = risk_and_gradient(features, labels, &params, cov)?;
    if !current.is_finite() {
        return Err(Error::Numerical("non-finite empirical risk".into()));
    }
    let mut trace = vec![current];
    let mut eta = cfg.initial_step;
    let mut iters = 0;
    while iters < cfg.max_iters && eta >= cfg.min_step {
        iters += 1;
        let candidate = project(step(&params, &grad, eta), cfg)?;
        let cand_risk = risk(features, labels, &candidate, cov)?;
        if !cand_risk.is_finite() {
            return Err(Error::Numerical("non-finite empirical risk".into()));
        }
        let predicted = inner(&grad, &params, &candidate).min(0.0);
        if cand_risk < current && cand_risk <= current + cfg.armijo * predicted {
            let decrease = current - cand_risk;
            params = candidate;
            let (r, g) = risk_and_gradient(features, labels, &params, cov)?;
            current = r;
            grad = g;
            trace.push(current);
            eta *= cfg.step_growth;
            if decrease <= cfg.tol * current {
                break;
            }
        } else {
            eta *= cfg.step_shrink;
        }
    }
    Ok((params, current, trace, iters))
}

/// Minimises the empirical risk over `(u, ω, b)` given per-example basis means.
pub fn train_on_features(
    features: &[BasisMeans],
    labels: &[Label],
    sys: &ReservoirSystem,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if !sys.is_definite() {
        return Err(Error::Regime(format!(
            "training needs a positive definite covariance, smallest eigenvalue is {:e}",
            sys.lambda_min
        )));
    }
    if features.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut rng = seeded_rng(cfg.seed);
    let mut best: Option<(ModelParams, f64, Vec<f64>)> = None;
    let mut restarts = Vec::with_capacity(cfg.restarts);
    for _ in 0..cfg.restarts {
        let start = random_init(sys.n, sys.r, cfg, &mut rng)?;
        let (params, r, trace, iterations) = descend(features, labels, &sys.cov, cfg, start)?;
        restarts.push(RestartResult {
            params: params.clone(),
            risk: r,
            iterations,
        });
        if best.as_ref().is_none_or(|(_, br, _)| r < *br) {
            best = Some((params, r, trace));
        }
    }
    let (params, risk, risk_trace) = best.expect("at least one restart");
    Ok(TrainOutcome {
        params,
        risk,
        risk_trace,
        restarts,
    })
}

/// Direct ERM on the exact means `ν_{x,u}`.
pub fn erm_train(d: &LabeledDataset, sys: &ReservoirSystem, cfg: &TrainConfig) -> Result<TrainOutcome> {
    let features = dataset_basis_means(d, sys)?;
    train_on_features(&features, d.labels(), sys, cfg)
}

/// Basis means of the order-`order` signature truncation for every path.
pub fn truncated_features(d: &LabeledDataset, sys: &ReservoirSystem, order: usize) -> Vec<BasisMeans> {
    let powers = w0_powers(&sys.w0, order);
    d.paths()
        .iter()
        .map(|p| truncated_basis_means(&partial_signature(p, order), &powers))
        .collect()
}

/// ERM with each mean replaced by `Σ_{k≤N} W₀^k u Ŝ_k(x)`.
pub fn truncated_erm_train(d: &LabeledDataset, sys: &ReservoirSystem, cfg: &TrainConfig, order: usize) -> Result<TrainOutcome> {
    if d.dim().is_some_and(|r| r != sys.r) {
        return Err(Error::Dimension {
            context: "path dimension must match the reservoir input dimension",
            expected: sys.r,
            got: d.dim().unwrap_or(0),
        });
    }
    let features = truncated_features(d, sys, order);
    train_on_features(&features, d.labels(), sys, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::paths::Path;

    fn two_constant_classes(noise: f64) -> (LabeledDataset, ReservoirSystem) {
        let mut paths = Vec::new();
        let mut labels = Vec::new();
        for k in 0..6 {
            let c = 1.0 + 0.1 * k as f64;
            paths.push(Path::constant(1.0, &DVector::from_vec(vec![c, 0.5])).unwrap());
            labels.push(Label::Pos);
            paths.push(Path::constant(1.0, &DVector::from_vec(vec![-c, 0.5])).unwrap());
            labels.push(Label::Neg);
        }
        let d = LabeledDataset::new("pm", paths, labels).unwrap();
        let w = DMatrix::from_row_slice(3, 3, &[0.1, 0.2, 0.0, -0.1, 0.0, 0.3, 0.2, 0.1, -0.2]);
        let sys = ReservoirSystem::from_matrices(w, DMatrix::identity(3, 3) * noise, 2, 1.0).unwrap();
        (d, sys)
    }

    #[test]
    fn separates_constant_classes() {
        let (d, sys) = two_constant_classes(0.01);
        let cfg = TrainConfig { seed: 3, ..TrainConfig::default() };
        let out = erm_train(&d, &sys, &cfg).unwrap();
        assert!(out.params.is_feasible(1.0));
        let features = dataset_basis_means(&d, &sys).unwrap();
        for (f, l) in features.iter().zip(d.labels()) {
            let margin = out.params.margin(&f.mean(&out.params.u));
            assert_eq!(Label::from_sign(margin), *l);
        }
        assert!(out.risk_trace.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(out.restarts.len(), 5);
        assert_eq!(*out.risk_trace.last().unwrap(), out.risk);
    }

    #[test]
    fn deterministic_given_seed() {
        let (d, sys) = two_constant_classes(0.3);
        let cfg = TrainConfig { seed: 11, max_iters: 50, restarts: 2, ..TrainConfig::default() };
        assert_eq!(erm_train(&d, &sys, &cfg).unwrap(), erm_train(&d, &sys, &cfg).unwrap());
    }

    #[test]
    fn rejects_singular_covariance() {
        let (d, _) = two_constant_classes(0.1);
        let sys = ReservoirSystem::from_matrices(DMatrix::zeros(3, 3), DMatrix::zeros(3, 3), 2, 1.0).unwrap();
        assert!(matches!(erm_train(&d, &sys, &TrainConfig::default()), Err(Error::Regime(_))));
    }

    #[test]
    fn rejects_bad_config() {
        let (d, sys) = two_constant_classes(0.1);
        let cfg = TrainConfig { restarts: 0, ..TrainConfig::default() };
        assert!(matches!(erm_train(&d, &sys, &cfg), Err(Error::Domain(_))));
        let cfg = TrainConfig { lambda: 0.0, ..TrainConfig::default() };
        assert!(matches!(erm_train(&d, &sys, &cfg), Err(Error::Domain(_))));
    }

    #[test]
    fn theta_clips_shift() {
        let (d, sys) = two_constant_classes(0.1);
        let cfg = TrainConfig { theta: Some(0.0), max_iters: 100, ..TrainConfig::default() };
        let out = erm_train(&d, &sys, &cfg).unwrap();
        assert_eq!(out.params.b, 0.0);
    }

    #[test]
    fn projection_keeps_losses() {
        let (d, sys) = two_constant_classes(0.2);
        let features = dataset_basis_means(&d, &sys).unwrap();
        let p = ModelParams {
            u: DMatrix::from_row_slice(3, 2, &[0.2, 0.1, -0.1, 0.3, 0.0, 0.2]),
            omega: DVector::from_vec(vec![2.0, -1.0, 0.5]),
            b: 0.3,
        };
        let q = project(p.clone(), &TrainConfig::default()).unwrap();
        let a = risk(&features, d.labels(), &p, &sys.cov).unwrap();
        let b = risk(&features, d.labels(), &q, &sys.cov).unwrap();
        assert!((a - b).abs() < 1e-14);
    }

    #[test]
    fn truncated_objective_matches_direct_for_high_order() {
        let (d, sys) = two_constant_classes(0.2);
        let direct = dataset_basis_means(&d, &sys).unwrap();
        let trunc = truncated_features(&d, &sys, 40);
        let p = random_init(3, 2, &TrainConfig::default(), &mut seeded_rng(1)).unwrap();
        let a = risk(&direct, d.labels(), &p, &sys.cov).unwrap();
        let b = risk(&trunc, d.labels(), &p, &sys.cov).unwrap();
        assert!((a - b).abs() < 1e-10);
    }
}
