//! Sampled input paths, labelled datasets and the path norms used by the
//! generalisation and truncation bounds.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeded_rng;

/// Binary class label, `-1` or `+1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "i64", into = "i64")]
pub enum Label {
    Neg,
    Pos,
}

impl Label {
    pub fn value(self) -> f64 {
        match self {
            Label::Neg => -1.0,
            Label::Pos => 1.0,
        }
    }

    /// `sign(z)` with the convention `sign(0) = +1`.
    pub fn from_sign(z: f64) -> Self {
        if z >= 0.0 {
            Label::Pos
        } else {
            Label::Neg
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Label::Neg => Label::Pos,
            Label::Pos => Label::Neg,
        }
    }
}

impl TryFrom<i64> for Label {
    type Error = String;

    fn try_from(v: i64) -> std::result::Result<Self, Self::Error> {
        match v {
            -1 => Ok(Label::Neg),
            1 => Ok(Label::Pos),
            other => Err(format!("label must be -1 or +1, got {other}")),
        }
    }
}

impl From<Label> for i64 {
    fn from(l: Label) -> i64 {
        match l {
            Label::Neg => -1,
            Label::Pos => 1,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", i64::from(*self))
    }
}

/// A continuous path on `[0, T]` known through samples and extended by
/// piecewise-linear interpolation.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    times: Vec<f64>,
    /// One row per sample instant, one column per coordinate.
    values: DMatrix<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PathNorm {
    /// `∫₀ᵀ ‖x(s)‖₂ ds`
    L1,
    /// `(∫₀ᵀ ‖x(s)‖₂² ds)^{1/2}`
    L2,
}

impl Path {
    pub fn new(times: Vec<f64>, values: DMatrix<f64>) -> Result<Self> {
        if times.len() < 2 {
            return Err(Error::Domain("a path needs at least two samples".into()));
        }
        if values.nrows() != times.len() {
            return Err(Error::Dimension {
                context: "path values must have one row per sample instant",
                expected: times.len(),
                got: values.nrows(),
            });
        }
        if values.ncols() == 0 {
            return Err(Error::Domain("path dimension r must be at least 1".into()));
        }
        if times[0] != 0.0 {
            return Err(Error::Domain(format!("path must start at t=0, got {}", times[0])));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) || times.iter().any(|t| !t.is_finite()) {
            return Err(Error::Domain("sample instants must be finite and strictly increasing".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("path values must be finite".into()));
        }
        Ok(Self { times, values })
    }

    /// Samples `f` on a uniform grid of `num_samples` instants over `[0, horizon]`.
    pub fn from_fn(horizon: f64, num_samples: usize, dim: usize, mut f: impl FnMut(f64) -> DVector<f64>) -> Result<Self> {
        let times = uniform_grid(horizon, num_samples);
        let mut values = DMatrix::zeros(num_samples, dim);
        for (k, &t) in times.iter().enumerate() {
            let v = f(t);
            if v.len() != dim {
                return Err(Error::Dimension {
                    context: "path generator output",
                    expected: dim,
                    got: v.len(),
                });
            }
            values.set_row(k, &v.transpose());
        }
        Self::new(times, values)
    }

    /// Constant path `c` on `[0, horizon]`, sampled at both endpoints.
    pub fn constant(horizon: f64, c: &DVector<f64>) -> Result<Self> {
        Self::from_fn(horizon, 2, c.len(), |_| c.clone())
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn sample(&self, k: usize) -> DVector<f64> {
        self.values.row(k).transpose()
    }

    pub fn dim(&self) -> usize {
        self.values.ncols()
    }

    pub fn num_samples(&self) -> usize {
        self.times.len()
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().expect("validated non-empty")
    }

    /// Piecewise-linear interpolant at `t ∈ [0, T]`.
    pub fn eval(&self, t: f64) -> Result<DVector<f64>> {
        let horizon = self.horizon();
        if !(0.0..=horizon).contains(&t) {
            return Err(Error::Domain(format!("t={t} outside [0, {horizon}]")));
        }
        let k = match self.times.binary_search_by(|s| s.total_cmp(&t)) {
            Ok(k) => return Ok(self.sample(k)),
            Err(k) => k,
        };
        let (t0, t1) = (self.times[k - 1], self.times[k]);
        let w = (t - t0) / (t1 - t0);
        Ok(self.values.row(k - 1).transpose() * (1.0 - w) + self.values.row(k).transpose() * w)
    }

    /// Path norm of the interpolant; each linear segment is integrated in
    /// closed form.
    pub fn norm(&self, which: PathNorm) -> f64 {
        match which {
            PathNorm::L1 => self.l1_norm(),
            PathNorm::L2 => self.l2_norm(),
        }
    }

    pub fn l2_norm(&self) -> f64 {
        let mut total = 0.0;
        for k in 0..self.times.len() - 1 {
            let h = self.times[k + 1] - self.times[k];
            let a = self.values.row(k);
            let b = self.values.row(k + 1);
            // ∫₀¹ ‖a + s(b − a)‖² ds = (‖a‖² + a·b + ‖b‖²) / 3
            total += h * (a.norm_squared() + a.dot(&b) + b.norm_squared()) / 3.0;
        }
        total.max(0.0).sqrt()
    }

    pub fn l1_norm(&self) -> f64 {
        let mut total = 0.0;
        for k in 0..self.times.len() - 1 {
            let h = self.times[k + 1] - self.times[k];
            let a = self.values.row(k).transpose();
            let d = self.values.row(k + 1).transpose() - &a;
            total += h * segment_norm_integral(&a, &d);
        }
        total
    }

    /// `α·x`, same sampling grid.
    pub fn scaled(&self, alpha: f64) -> Path {
        Path {
            times: self.times.clone(),
            values: self.values.scale(alpha),
        }
    }

    /// `α·x + β·y` for two paths on the same grid.
    pub fn linear_combination(alpha: f64, x: &Path, beta: f64, y: &Path) -> Result<Path> {
        if x.times != y.times || x.dim() != y.dim() {
            return Err(Error::Domain("linear combination requires identical grids and dimensions".into()));
        }
        Ok(Path {
            times: x.times.clone(),
            values: x.values.scale(alpha) + y.values.scale(beta),
        })
    }
}

/// `∫₀¹ ‖a + s·d‖₂ ds`.
fn segment_norm_integral(a: &DVector<f64>, d: &DVector<f64>) -> f64 {
    let dd = d.norm_squared();
    if dd <= 1e-300 {
        return a.norm();
    }
    let c = a.dot(d) / dd;
    // ‖a + s d‖² = dd·((s + c)² + e²)
    let e2 = (a.norm_squared() / dd - c * c).max(0.0);
    let e = e2.sqrt();
    let antideriv = |tau: f64| -> f64 {
        let root = (tau * tau + e2).sqrt();
        if e == 0.0 {
            0.5 * tau * tau.abs()
        } else {
            0.5 * (tau * root + e2 * (tau / e).asinh())
        }
    };
    dd.sqrt() * (antideriv(1.0 + c) - antideriv(c))
}

/// `num_samples` uniformly spaced instants on `[0, horizon]`, endpoints exact.
pub fn uniform_grid(horizon: f64, num_samples: usize) -> Vec<f64> {
    let last = num_samples - 1;
    (0..num_samples)
        .map(|k| if k == last { horizon } else { horizon * k as f64 / last as f64 })
        .collect()
}

/// Labelled paths sharing dimension and horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub name: String,
    paths: Vec<Path>,
    labels: Vec<Label>,
}

impl LabeledDataset {
    pub fn new(name: impl Into<String>, paths: Vec<Path>, labels: Vec<Label>) -> Result<Self> {
        if paths.len() != labels.len() {
            return Err(Error::Dimension {
                context: "one label per path",
                expected: paths.len(),
                got: labels.len(),
            });
        }
        if let Some(first) = paths.first() {
            let (r, horizon) = (first.dim(), first.horizon());
            for p in &paths {
                if p.dim() != r {
                    return Err(Error::Dimension {
                        context: "all paths must share the dimension r",
                        expected: r,
                        got: p.dim(),
                    });
                }
                if p.horizon() != horizon {
                    return Err(Error::Domain(format!(
                        "all paths must share the horizon T={horizon}, found {}",
                        p.horizon()
                    )));
                }
            }
        }
        Ok(Self {
            name: name.into(),
            paths,
            labels,
        })
    }

    pub fn paths(&self) -> &[Path] {
        &self.paths
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn dim(&self) -> Option<usize> {
        self.paths.first().map(Path::dim)
    }

    pub fn horizon(&self) -> Option<f64> {
        self.paths.first().map(Path::horizon)
    }

    pub fn count(&self, label: Label) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }

    /// Dataset made of the given indices, in order.
    pub fn subset(&self, indices: &[usize]) -> LabeledDataset {
        LabeledDataset {
            name: self.name.clone(),
            paths: indices.iter().map(|&i| self.paths[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    /// First `m` examples.
    pub fn head(&self, m: usize) -> LabeledDataset {
        let m = m.min(self.len());
        self.subset(&(0..m).collect::<Vec<_>>())
    }

    pub fn concat(&self, other: &LabeledDataset) -> Result<LabeledDataset> {
        let mut paths = self.paths.clone();
        paths.extend(other.paths.iter().cloned());
        let mut labels = self.labels.clone();
        labels.extend(other.labels.iter().copied());
        LabeledDataset::new(self.name.clone(), paths, labels)
    }

    /// Copy with the labels at `indices` negated.
    pub fn with_flipped(&self, indices: &[usize]) -> LabeledDataset {
        let mut out = self.clone();
        for &i in indices {
            out.labels[i] = out.labels[i].flipped();
        }
        out
    }

    /// Stratified split holding out `round(test_fraction · class size)` of
    /// each class. Both parts are shuffled.
    pub fn stratified_split(&self, test_fraction: f64, seed: u64) -> Result<(LabeledDataset, LabeledDataset)> {
        if !(0.0..1.0).contains(&test_fraction) {
            return Err(Error::Domain(format!("test fraction {test_fraction} not in [0, 1)")));
        }
        let mut rng = seeded_rng(seed);
        let mut train = Vec::new();
        let mut test = Vec::new();
        for label in [Label::Neg, Label::Pos] {
            let mut idx: Vec<usize> = (0..self.len()).filter(|&i| self.labels[i] == label).collect();
            idx.shuffle(&mut rng);
            let n_test = (test_fraction * idx.len() as f64).round() as usize;
            test.extend_from_slice(&idx[..n_test]);
            train.extend_from_slice(&idx[n_test..]);
        }
        train.shuffle(&mut rng);
        test.shuffle(&mut rng);
        Ok((self.subset(&train), self.subset(&test)))
    }
}

/// Maximum path norm over the dataset (the ball radius of the bounds).
pub fn dataset_radius(d: &LabeledDataset, norm: PathNorm) -> Result<f64> {
    if d.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(d.paths().iter().map(|p| p.norm(norm)).fold(0.0, f64::max))
}

/// Indices flipped by [`corrupt_labels`]: `floor(fraction · m)` positions
/// drawn uniformly without replacement.
pub fn corruption_indices(m: usize, fraction: f64, seed: u64) -> Result<Vec<usize>> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::Domain(format!("corruption fraction {fraction} not in [0, 1]")));
    }
    let count = ((fraction * m as f64).floor() as usize).min(m);
    let mut rng = seeded_rng(seed);
    let mut idx = sample(&mut rng, m, count).into_vec();
    idx.sort_unstable();
    Ok(idx)
}

/// Flip a uniformly chosen `floor(fraction · m)` labels.
pub fn corrupt_labels(d: &LabeledDataset, fraction: f64, seed: u64) -> Result<LabeledDataset> {
    let idx = corruption_indices(d.len(), fraction, seed)?;
    Ok(d.with_flipped(&idx))
}
