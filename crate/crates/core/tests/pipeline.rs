use approx::assert_relative_eq;
use nalgebra::{DMatrix, DVector};

use srnn::eval::{
    accuracy, bound_check_experiment, pac_bound, robustness_experiment, sample_complexity,
    size_grid, vc_bound, AccuracyMode, BoundInputs, ExperimentSettings, Prepared,
};
use srnn::features::{dataset_basis_means, partial_signature, truncated_basis_means, w0_powers, BasisMeans};
use srnn::learn::{erm_train, loss, risk, risk_gradient, truncated_erm_train, ModelParams, TrainConfig};
use srnn::paths::{dataset_radius, PathNorm};
use srnn::reservoir::{compute_covariance, exp_norm_integral_with, CovarianceMethod};
use srnn::synthetic::{gen_trig_dataset, TRIG_DIM, TRIG_HORIZON};
use srnn::{seeded_rng, Label, LabeledDataset, Path, ReservoirSpec, ReservoirSystem};

fn small_system(delta: f64, seed: u64) -> ReservoirSystem {
    ReservoirSystem::build(ReservoirSpec {
        n: 6,
        r: 2,
        horizon: 1.0,
        noise_scale: delta,
        connectivity_seed: seed,
        noise_seed: seed + 1,
    })
    .unwrap()
}

fn wavy(sign: f64, k: usize) -> Path {
    Path::from_fn(1.0, 15, 2, |t| {
        DVector::from_vec(vec![sign * (1.0 + 0.1 * k as f64) + 0.2 * (3.0 * t).sin(), (k as f64 * t).cos()])
    })
    .unwrap()
}

fn toy_dataset() -> LabeledDataset {
    let mut paths = Vec::new();
    let mut labels = Vec::new();
    for k in 0..10 {
        paths.push(wavy(1.0, k));
        labels.push(Label::Pos);
        paths.push(wavy(-1.0, k));
        labels.push(Label::Neg);
    }
    LabeledDataset::new("toy", paths, labels).unwrap()
}

#[test]
fn bias_gradient_vanishes_on_mirrored_pair() {
    let sys = small_system(1.0, 3);
    let x = wavy(1.0, 2);
    let d = LabeledDataset::new("pair", vec![x.clone(), x.scaled(-1.0)], vec![Label::Pos, Label::Neg]).unwrap();
    let features = dataset_basis_means(&d, &sys).unwrap();
    let mut rng = seeded_rng(0);
    let p = srnn::learn::erm::random_init(6, 2, &TrainConfig::default(), &mut rng).unwrap();
    let g = risk_gradient(&features, d.labels(), &p, &sys.cov).unwrap();
    assert!(g.b.abs() < 1e-15);
}

#[test]
fn truncation_order_zero_uses_first_level_only() {
    let sys = small_system(1.0, 4);
    let d = toy_dataset();
    let mut rng = seeded_rng(1);
    let p = srnn::learn::erm::random_init(6, 2, &TrainConfig::default(), &mut rng).unwrap();
    let powers = w0_powers(&sys.w0, 0);
    let features: Vec<BasisMeans> = d.paths().iter().map(|x| truncated_basis_means(&partial_signature(x, 0), &powers)).collect();
    let direct: f64 = d
        .paths()
        .iter()
        .zip(d.labels())
        .map(|(x, l)| loss(&(&p.u * &partial_signature(x, 0).levels[0]), *l, &p, &sys.cov).unwrap())
        .sum::<f64>()
        / d.len() as f64;
    assert_relative_eq!(risk(&features, d.labels(), &p, &sys.cov).unwrap(), direct, max_relative = 1e-13);
}

#[test]
fn truncated_training_records_objective_and_converges() {
    let sys = small_system(0.5, 5);
    let d = toy_dataset();
    let cfg = TrainConfig { seed: 2, max_iters: 300, ..TrainConfig::default() };
    let direct = erm_train(&d, &sys, &cfg).unwrap();
    let trunc = truncated_erm_train(&d, &sys, &cfg, 30).unwrap();
    // with a negligible tail both objectives coincide, so do the trajectories
    assert!((direct.risk - trunc.risk).abs() < 1e-8);
    assert!(trunc.risk_trace.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn toy_classes_are_learned() {
    let sys = small_system(0.2, 6);
    let d = toy_dataset();
    let out = erm_train(&d, &sys, &TrainConfig { seed: 1, ..TrainConfig::default() }).unwrap();
    let acc = accuracy(&d, &out.params, &sys, AccuracyMode::Noiseless, 1, &mut seeded_rng(0)).unwrap();
    assert_eq!(acc.avg, 1.0);
}

#[test]
fn synthetic_training_risk_is_small() {
    let d = gen_trig_dataset(1, 70, 256).unwrap();
    let (train, _) = d.stratified_split(0.3, 2).unwrap();
    let sys = ReservoirSystem::build(ReservoirSpec {
        n: 50,
        r: TRIG_DIM,
        horizon: TRIG_HORIZON,
        noise_scale: 2.0,
        connectivity_seed: 1,
        noise_seed: 2,
    })
    .unwrap();
    let out = erm_train(&train, &sys, &TrainConfig { seed: 3, restarts: 2, ..TrainConfig::default() }).unwrap();
    assert!(out.risk < 0.05, "risk {}", out.risk);
    assert!(out.params.is_feasible(1.0));
}

#[test]
fn bound_formulas_against_hand_evaluation() {
    let bi = BoundInputs {
        theta: 1.0,
        lambda: 1.0,
        radius: 1.0,
        m: 100,
        delta: 0.01,
        lambda_min: 1.0,
        exp_norm_int: 1.0,
    };
    assert_relative_eq!(pac_bound(&bi).unwrap(), 1.332_965_639_680_511, max_relative = 1e-13);
    assert_eq!(sample_complexity(0.5, 0.5, 1.0, 1.0, 1.0, 1.0, 1.0).unwrap(), 1964);
    let halved = sample_complexity(0.25, 0.5, 1.0, 1.0, 1.0, 1.0, 1.0).unwrap();
    assert!((halved as f64 / 1964.0 - 4.0).abs() < 0.01);
    assert_relative_eq!(vc_bound(0.0, 2, 1000, 0.1).unwrap(), 0.236_056_548_915_315_13, max_relative = 1e-13);
    let grid: Vec<f64> = [10, 100, 1000, 10_000].iter().map(|&m| vc_bound(0.0, 2, m, 0.1).unwrap()).collect();
    assert!(grid.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn covariance_grows_with_horizon() {
    let sys = small_system(1.0, 7);
    let mut last = 0.0;
    for t in [0.25, 0.5, 1.0, 2.0, 4.0] {
        let a = compute_covariance(&sys.w0, &sys.sigma, t, 1e-10, CovarianceMethod::Ode).unwrap();
        assert!(a.norm() >= last);
        last = a.norm();
        let mut rng = seeded_rng(t.to_bits());
        for _ in 0..1000 {
            let x = DVector::from_fn(6, |_, _| rand::Rng::random_range(&mut rng, -1.0..1.0));
            assert!(x.dot(&(&a * &x)) >= -1e-10 * a.norm() * x.norm_squared());
        }
    }
}

#[test]
fn exp_norm_integral_refines() {
    let mut rng = seeded_rng(8);
    let w0 = DMatrix::from_fn(6, 6, |_, _| rand::Rng::random_range(&mut rng, -0.5..0.5)) - DMatrix::identity(6, 6);
    let coarse = exp_norm_integral_with(&w0, 2.0, 8).unwrap();
    let fine = exp_norm_integral_with(&w0, 2.0, 16).unwrap();
    assert!((coarse - fine).abs() < 1e-8 * fine);
}

#[test]
fn harnesses_on_toy_problem() {
    let sys = small_system(1.0, 9);
    let d = toy_dataset();
    let radius = dataset_radius(&d, PathNorm::L2).unwrap();
    let (train, test) = d.stratified_split(0.3, 1).unwrap();
    let tr = Prepared::new(&train, &sys).unwrap();
    let te = Prepared::new(&test, &sys).unwrap();
    let settings = ExperimentSettings {
        train: TrainConfig { seed: 4, restarts: 2, max_iters: 200, ..TrainConfig::default() },
        trials: 5,
        ..ExperimentSettings::default()
    };
    let grid = size_grid(4, train.len(), 4);
    let rep = bound_check_experiment(&tr, &te, &sys, &settings, &grid, radius).unwrap();
    assert_eq!(rep.runs.len(), grid.len());
    assert_eq!(rep.trials.len(), 5 * grid.len());
    for r in &rep.runs {
        assert!(r.gap >= 0.0);
        assert!(r.bound_holds.unwrap());
        assert!((0.0..=1.0).contains(&r.stochastic_avg));
        assert!(r.b.abs() <= rep.theta);
    }
    let first = rep.runs[0].bound.unwrap() * (grid[0] as f64).sqrt();
    let last = rep.runs.last().unwrap().bound.unwrap() * (*grid.last().unwrap() as f64).sqrt();
    assert_relative_eq!(first, last, max_relative = 1e-12);

    let robust = robustness_experiment(&tr, &te, &sys, &settings, &[0.0, 0.05, 0.1, 0.15]).unwrap();
    assert_eq!(robust.runs.len(), 4);
    assert_eq!(robust.runs[0].robustness_ratio, Some(1.0));
    let clean_only = robustness_experiment(&tr, &te, &sys, &settings, &[0.0]).unwrap();
    assert_eq!(clean_only.runs[0], robust.runs[0]);
}

#[test]
fn params_json_round_trip() {
    let p = ModelParams::new(DMatrix::from_row_slice(2, 1, &[0.1, -0.3]), DVector::from_vec(vec![0.6, 0.8]), 0.25).unwrap();
    let text = serde_json::to_string(&p).unwrap();
    assert_eq!(serde_json::from_str::<ModelParams>(&text).unwrap(), p);
}
