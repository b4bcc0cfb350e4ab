//! Synthetic two-class dataset of random trigonometric polynomials.
//!
//! A path is `x(t) = Σ_{k=0}^{6} a_k cos(kt) + Σ_{k=1}^{6} b_k sin(kt)` on
//! `[0, 2π]` with values in `R^5`. Class `+1` draws every coordinate of the
//! `a_k` uniformly from `[-0.2, 1]` and of the `b_k` from `[-1, 0.2]`;
//! class `-1` swaps the two intervals.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};
use crate::paths::{Label, LabeledDataset, Path};
use crate::seeded_rng;

pub const TRIG_DIM: usize = 5;
pub const TRIG_DEGREE: usize = 6;
pub const TRIG_HORIZON: f64 = 2.0 * PI;
pub const DEFAULT_SAMPLES_PER_PATH: usize = 256;

const HIGH: (f64, f64) = (-0.2, 1.0);
const LOW: (f64, f64) = (-1.0, 0.2);

/// Coefficient intervals `(I, J)` for the cosine and sine terms of a class.
pub fn class_intervals(label: Label) -> ((f64, f64), (f64, f64)) {
    match label {
        Label::Pos => (HIGH, LOW),
        Label::Neg => (LOW, HIGH),
    }
}

/// Coefficients of one vector-valued trigonometric polynomial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigPolynomial {
    /// Column `k` holds `a_k`, `k = 0..=6`.
    pub cos: DMatrix<f64>,
    /// Column `k - 1` holds `b_k`, `k = 1..=6`.
    pub sin: DMatrix<f64>,
}

impl TrigPolynomial {
    pub fn draw<R: Rng + ?Sized>(rng: &mut R, label: Label) -> Self {
        let ((ilo, ihi), (jlo, jhi)) = class_intervals(label);
        let cos = DMatrix::from_fn(TRIG_DIM, TRIG_DEGREE + 1, |_, _| rng.random_range(ilo..=ihi));
        let sin = DMatrix::from_fn(TRIG_DIM, TRIG_DEGREE, |_, _| rng.random_range(jlo..=jhi));
        Self { cos, sin }
    }

    pub fn eval(&self, t: f64) -> DVector<f64> {
        let mut out = self.cos.column(0).clone_owned();
        for k in 1..=TRIG_DEGREE {
            let kt = k as f64 * t;
            out += self.cos.column(k) * kt.cos() + self.sin.column(k - 1) * kt.sin();
        }
        out
    }

    pub fn sample(&self, num_samples: usize) -> Result<Path> {
        Path::from_fn(TRIG_HORIZON, num_samples, TRIG_DIM, |t| self.eval(t))
    }
}

/// `2 · samples_per_class` labelled paths: the `+1` class first, then `-1`.
pub fn gen_trig_dataset(seed: u64, samples_per_class: usize, num_samples_per_path: usize) -> Result<LabeledDataset> {
    if samples_per_class == 0 {
        return Err(Error::Domain("samples_per_class must be at least 1".into()));
    }
    if num_samples_per_path < 2 {
        return Err(Error::Domain("a path needs at least two samples".into()));
    }
    let mut rng = seeded_rng(seed);
    let mut paths = Vec::with_capacity(2 * samples_per_class);
    let mut labels = Vec::with_capacity(2 * samples_per_class);
    for label in [Label::Pos, Label::Neg] {
        for _ in 0..samples_per_class {
            paths.push(TrigPolynomial::draw(&mut rng, label).sample(num_samples_per_path)?);
            labels.push(label);
        }
    }
    LabeledDataset::new(format!("trig-{seed}"), paths, labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes_and_labels() {
        let d = gen_trig_dataset(3, 70, 64).unwrap();
        assert_eq!(d.len(), 140);
        assert_eq!(d.count(Label::Pos), 70);
        assert_eq!(d.count(Label::Neg), 70);
        assert_eq!(d.dim(), Some(5));
        assert_eq!(d.horizon(), Some(TRIG_HORIZON));
    }

    #[test]
    fn deterministic_given_seed() {
        let a = gen_trig_dataset(11, 4, 32).unwrap();
        let b = gen_trig_dataset(11, 4, 32).unwrap();
        assert_eq!(a, b);
        let c = gen_trig_dataset(12, 4, 32).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn coefficient_ranges_per_class() {
        let mut rng = seeded_rng(99);
        for label in [Label::Pos, Label::Neg] {
            let ((ilo, ihi), (jlo, jhi)) = class_intervals(label);
            let (mut cmin, mut cmax, mut smin, mut smax) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
            for _ in 0..10_000 {
                let p = TrigPolynomial::draw(&mut rng, label);
                cmin = cmin.min(p.cos.min());
                cmax = cmax.max(p.cos.max());
                smin = smin.min(p.sin.min());
                smax = smax.max(p.sin.max());
            }
            assert!(cmin >= ilo && cmax <= ihi);
            assert!(smin >= jlo && smax <= jhi);
            // The draws fill the intervals.
            assert!(cmin - ilo < 0.01 && ihi - cmax < 0.01);
            assert!(smin - jlo < 0.01 && jhi - smax < 0.01);
        }
    }

    #[test]
    fn interpolant_tracks_polynomial() {
        let mut rng = seeded_rng(5);
        let poly = TrigPolynomial::draw(&mut rng, Label::Pos);
        let path = poly.sample(1000).unwrap();
        let t = 0.37 * TRIG_HORIZON;
        let exact = poly.eval(t);
        let interp = path.eval(t).unwrap();
        // linear interpolation error is at most h²/8 · sup|x''|
        let h = TRIG_HORIZON / 999.0;
        for i in 0..TRIG_DIM {
            let curv: f64 = (1..=TRIG_DEGREE)
                .map(|k| (k * k) as f64 * (poly.cos[(i, k)].abs() + poly.sin[(i, k - 1)].abs()))
                .sum();
            assert!((interp[i] - exact[i]).abs() <= h * h / 8.0 * curv + 1e-14);
        }
    }

    #[test]
    fn rejects_empty_classes() {
        assert!(gen_trig_dataset(1, 0, 10).is_err());
    }
}
