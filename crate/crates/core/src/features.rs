//! Deterministic part of the hidden-state law.
//!
//! For an input path `x` and pre-processing map `u` the terminal mean is
//! `ν_{x,u} = ∫₀ᵀ e^{W₀(T−s)} u x(s) ds`. It is linear in `u`, so each path
//! is summarised once by its *basis means*: `r` matrices `M_j` (n × n) with
//! `ν_{x,u} = Σ_j M_j u_{·j}`; column `i` of `M_j` is `ν_{x,e_ij}`.
//!
//! The same structure arises from the partial signature
//! `Ŝ_k(x) = ∫₀ᵀ (T−s)^k/k! x(s) ds`, since `ν_{x,u} = Σ_k W₀^k u Ŝ_k(x)`.

use std::collections::HashMap;
use std::io::Write;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{matrix_exp, spectral_norm};
use crate::ode::{integrate, OdeOptions};
use crate::paths::{LabeledDataset, Path};
use crate::quadrature::gauss_legendre;
use crate::reservoir::ReservoirSystem;

/// How a mean vector was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeanSource {
    /// Exact integration of the piecewise-linear interpolant.
    Propagator,
    DirectQuadrature,
    Ode,
    SignatureTruncation(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeanVector {
    pub value: DVector<f64>,
    pub source: MeanSource,
}

fn check_dims(path: &Path, u: &DMatrix<f64>, w0: &DMatrix<f64>) -> Result<()> {
    if u.ncols() != path.dim() {
        return Err(Error::Dimension {
            context: "u must have one column per path coordinate",
            expected: path.dim(),
            got: u.ncols(),
        });
    }
    if u.nrows() != w0.nrows() {
        return Err(Error::Dimension {
            context: "u must have one row per hidden unit",
            expected: w0.nrows(),
            got: u.nrows(),
        });
    }
    Ok(())
}

/// `(e^{X}, φ₁(X), φ₂(X))` from one exponential of the block matrix
/// `[[X, I, 0], [0, 0, I], [0, 0, 0]]`.
fn phi_functions(x: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>, DMatrix<f64>)> {
    let n = x.nrows();
    let mut z = DMatrix::zeros(3 * n, 3 * n);
    z.view_mut((0, 0), (n, n)).copy_from(x);
    z.view_mut((0, n), (n, n)).fill_diagonal(1.0);
    z.view_mut((n, 2 * n), (n, n)).fill_diagonal(1.0);
    let e = matrix_exp(&z)?;
    Ok((
        e.view((0, 0), (n, n)).clone_owned(),
        e.view((0, n), (n, n)).clone_owned(),
        e.view((0, 2 * n), (n, n)).clone_owned(),
    ))
}

/// Nodal weights of the exact mean rule on one sampling grid:
/// `ν_{x,u} = Σ_l K_l u x(t_l)` for every piecewise-linear `x` on the grid.
#[derive(Debug, Clone)]
pub struct MeanKernel {
    times: Vec<f64>,
    nodes: Vec<DMatrix<f64>>,
}

impl MeanKernel {
    pub fn new(w0: &DMatrix<f64>, times: &[f64]) -> Result<Self> {
        let n = w0.nrows();
        let len = times.len();
        if len < 2 {
            return Err(Error::Domain("a sampling grid needs at least two instants".into()));
        }
        // Segments of equal length (to 1e-12 relative) share one block exponential.
        let mut cache: Vec<(f64, (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>))> = Vec::new();
        let mut blocks = Vec::with_capacity(len - 1);
        for k in 0..len - 1 {
            let h = times[k + 1] - times[k];
            let idx = match cache.iter().position(|(hc, _)| (hc - h).abs() <= 1e-12 * h) {
                Some(i) => i,
                None => {
                    cache.push((h, phi_functions(&(w0 * h))?));
                    cache.len() - 1
                }
            };
            blocks.push((h, idx));
        }
        let mut nodes = vec![DMatrix::zeros(n, n); len];
        // propagator e^{W₀(T − t_{k+1})}, walked backwards
        let mut prop = DMatrix::identity(n, n);
        for k in (0..len - 1).rev() {
            let (h, idx) = blocks[k];
            let (e, phi1, phi2) = &cache[idx].1;
            let right = &prop * phi2 * h;
            let left = &prop * (phi1 - phi2) * h;
            nodes[k + 1] += right;
            nodes[k] += left;
            prop = &prop * e;
        }
        Ok(Self {
            times: times.to_vec(),
            nodes,
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    fn check_grid(&self, path: &Path) -> Result<()> {
        if path.times() != self.times.as_slice() {
            return Err(Error::Domain("path sampled on a different grid than the kernel".into()));
        }
        Ok(())
    }

    pub fn mean(&self, path: &Path, u: &DMatrix<f64>) -> Result<DVector<f64>> {
        self.check_grid(path)?;
        let n = u.nrows();
        let mut acc = DVector::zeros(n);
        for (l, k) in self.nodes.iter().enumerate() {
            acc += k * (u * path.sample(l));
        }
        Ok(acc)
    }

    pub fn basis_means(&self, path: &Path) -> Result<BasisMeans> {
        self.check_grid(path)?;
        let n = self.nodes[0].nrows();
        let values = path.values();
        let blocks = (0..path.dim())
            .map(|j| {
                let mut m = DMatrix::zeros(n, n);
                for (l, k) in self.nodes.iter().enumerate() {
                    let c = values[(l, j)];
                    if c != 0.0 {
                        m += k * c;
                    }
                }
                m
            })
            .collect();
        Ok(BasisMeans { blocks })
    }
}

/// `ν_{x,u}` by exact integration of the interpolated path.
pub fn compute_mean(path: &Path, u: &DMatrix<f64>, sys: &ReservoirSystem) -> Result<MeanVector> {
    check_dims(path, u, &sys.w0)?;
    let kernel = MeanKernel::new(&sys.w0, path.times())?;
    Ok(MeanVector {
        value: kernel.mean(path, u)?,
        source: MeanSource::Propagator,
    })
}

/// `ν_{x,u}` by Gauss–Legendre quadrature on each sampling segment, with at
/// least 64 nodes per unit time and a matrix exponential at every node.
pub fn compute_mean_quadrature(path: &Path, u: &DMatrix<f64>, w0: &DMatrix<f64>) -> Result<MeanVector> {
    check_dims(path, u, w0)?;
    let horizon = path.horizon();
    let mut acc = DVector::zeros(w0.nrows());
    let times = path.times();
    for k in 0..times.len() - 1 {
        let (a, b) = (times[k], times[k + 1]);
        let q = ((64.0 * (b - a)).ceil() as usize).max(4);
        let (x, w) = gauss_legendre(q);
        for (xi, wi) in x.iter().zip(&w) {
            let s = a + 0.5 * (b - a) * (xi + 1.0);
            let e = matrix_exp(&(w0 * (horizon - s)))?;
            acc += e * (u * path.eval(s)?) * (0.5 * (b - a) * wi);
        }
    }
    Ok(MeanVector {
        value: acc,
        source: MeanSource::DirectQuadrature,
    })
}

/// `ν_{x,u}` as `y(T)` for `y' = W₀y + u x(t)`, `y(0) = 0`, integrated
/// adaptively segment by segment.
pub fn compute_mean_ode(path: &Path, u: &DMatrix<f64>, w0: &DMatrix<f64>, tol: f64) -> Result<MeanVector> {
    check_dims(path, u, w0)?;
    let n = w0.nrows();
    let opts = OdeOptions {
        atol: tol,
        rtol: tol,
        ..OdeOptions::default()
    };
    let times = path.times();
    let mut y = vec![0.0; n];
    for k in 0..times.len() - 1 {
        let (a, b) = (times[k], times[k + 1]);
        let xa = u * path.sample(k);
        let xb = u * path.sample(k + 1);
        let rhs = |t: f64, y: &[f64], dy: &mut [f64]| {
            let w = (t - a) / (b - a);
            let yv = DVector::from_column_slice(y);
            let d = w0 * yv + &xa * (1.0 - w) + &xb * w;
            dy.copy_from_slice(d.as_slice());
        };
        y = integrate(rhs, a, b, &y, &opts)?;
    }
    Ok(MeanVector {
        value: DVector::from_vec(y),
        source: MeanSource::Ode,
    })
}

/// Per-path linear map `u ↦ ν_{x,u}`, stored as the `r` blocks `M_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisMeans {
    pub blocks: Vec<DMatrix<f64>>,
}

impl BasisMeans {
    pub fn n(&self) -> usize {
        self.blocks.first().map_or(0, DMatrix::nrows)
    }

    pub fn r(&self) -> usize {
        self.blocks.len()
    }

    /// `ν_{x,e_ij}`.
    pub fn basis_vector(&self, i: usize, j: usize) -> DVector<f64> {
        self.blocks[j].column(i).clone_owned()
    }

    /// `ν_{x,u} = Σ_j M_j u_{·j}`.
    pub fn mean(&self, u: &DMatrix<f64>) -> DVector<f64> {
        let mut acc = DVector::zeros(self.n());
        for (j, m) in self.blocks.iter().enumerate() {
            acc += m * u.column(j);
        }
        acc
    }

    /// The `n × r` matrix `(⟨ω, ν_{x,e_ij}⟩)_{ij}`.
    pub fn directional(&self, omega: &DVector<f64>) -> DMatrix<f64> {
        let n = self.n();
        let mut out = DMatrix::zeros(n, self.r());
        for (j, m) in self.blocks.iter().enumerate() {
            out.set_column(j, &(m.transpose() * omega));
        }
        out
    }
}

/// The `n·r` basis means `ν_{x,e_ij}` of one path.
pub fn basis_means(path: &Path, sys: &ReservoirSystem) -> Result<BasisMeans> {
    if path.dim() != sys.r {
        return Err(Error::Dimension {
            context: "path dimension must match the reservoir input dimension",
            expected: sys.r,
            got: path.dim(),
        });
    }
    MeanKernel::new(&sys.w0, path.times())?.basis_means(path)
}

/// Basis means of every path in a dataset; one kernel per distinct grid.
pub fn dataset_basis_means(d: &LabeledDataset, sys: &ReservoirSystem) -> Result<Vec<BasisMeans>> {
    let mut kernels: HashMap<Vec<u64>, MeanKernel> = HashMap::new();
    let mut out = Vec::with_capacity(d.len());
    for p in d.paths() {
        if p.dim() != sys.r {
            return Err(Error::Dimension {
                context: "path dimension must match the reservoir input dimension",
                expected: sys.r,
                got: p.dim(),
            });
        }
        let key: Vec<u64> = p.times().iter().map(|t| t.to_bits()).collect();
        if !kernels.contains_key(&key) {
            kernels.insert(key.clone(), MeanKernel::new(&sys.w0, p.times())?);
        }
        out.push(kernels[&key].basis_means(p)?);
    }
    Ok(out)
}

/// The first `N + 1` levels `∫₀ᵀ (T−s)^k/k! x(s) ds` of the partial signature.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialSignature {
    pub levels: Vec<DVector<f64>>,
    pub horizon: f64,
}

impl PartialSignature {
    pub fn order(&self) -> usize {
        self.levels.len() - 1
    }
}

/// Levels `0..=order`; each segment uses a Gauss–Legendre rule exact for
/// the polynomial integrand.
pub fn partial_signature(path: &Path, order: usize) -> PartialSignature {
    let horizon = path.horizon();
    let r = path.dim();
    let mut levels = vec![DVector::zeros(r); order + 1];
    let (x, w) = gauss_legendre(order / 2 + 2);
    let times = path.times();
    for k in 0..times.len() - 1 {
        let (a, b) = (times[k], times[k + 1]);
        let xa = path.sample(k);
        let xb = path.sample(k + 1);
        for (xi, wi) in x.iter().zip(&w) {
            let theta = 0.5 * (xi + 1.0);
            let s = a + (b - a) * theta;
            let val = &xa * (1.0 - theta) + &xb * theta;
            let weight = 0.5 * (b - a) * wi;
            let mut coeff = 1.0;
            for (lvl, out) in levels.iter_mut().enumerate() {
                if lvl > 0 {
                    coeff *= (horizon - s) / lvl as f64;
                }
                *out += &val * (weight * coeff);
            }
        }
    }
    PartialSignature { levels, horizon }
}

/// `Σ_{k=0}^{N} W₀^k u Ŝ_k`, evaluated by Horner's rule.
pub fn mean_from_signature(sig: &PartialSignature, u: &DMatrix<f64>, w0: &DMatrix<f64>) -> Result<MeanVector> {
    let r = sig.levels[0].len();
    if u.ncols() != r || u.nrows() != w0.nrows() {
        return Err(Error::Dimension {
            context: "u must be n×r",
            expected: r,
            got: u.ncols(),
        });
    }
    let mut acc = DVector::zeros(w0.nrows());
    for level in sig.levels.iter().rev() {
        acc = w0 * acc + u * level;
    }
    Ok(MeanVector {
        value: acc,
        source: MeanSource::SignatureTruncation(sig.order()),
    })
}

/// `[I, W₀, W₀², …, W₀^N]`.
pub fn w0_powers(w0: &DMatrix<f64>, order: usize) -> Vec<DMatrix<f64>> {
    let n = w0.nrows();
    let mut out = Vec::with_capacity(order + 1);
    out.push(DMatrix::identity(n, n));
    for k in 1..=order {
        let next = w0 * &out[k - 1];
        out.push(next);
    }
    out
}

/// Basis means of the truncated objective: `M_j = Σ_k Ŝ_k[j] W₀^k`.
pub fn truncated_basis_means(sig: &PartialSignature, powers: &[DMatrix<f64>]) -> BasisMeans {
    let n = powers[0].nrows();
    let r = sig.levels[0].len();
    let blocks = (0..r)
        .map(|j| {
            let mut m = DMatrix::zeros(n, n);
            for (lvl, p) in sig.levels.iter().zip(powers) {
                m += p * lvl[j];
            }
            m
        })
        .collect();
    BasisMeans { blocks }
}

/// `Λ R₁ e^{aT} (aT)^{N+1}/(N+1)!` with `a = ‖W₀‖` (spectral).
pub fn truncation_error_bound(lambda: f64, r1: f64, w0: &DMatrix<f64>, horizon: f64, order: usize) -> f64 {
    truncation_error_bound_from_norm(lambda, r1, spectral_norm(w0), horizon, order)
}

pub fn truncation_error_bound_from_norm(lambda: f64, r1: f64, w0_norm: f64, horizon: f64, order: usize) -> f64 {
    let a = w0_norm * horizon;
    // (aT)^{N+1}/(N+1)! as a running product
    let tail: f64 = (1..=order + 1).map(|k| a / k as f64).product();
    lambda * r1 * a.exp() * tail
}

/// Smallest `N` with `truncation_error_bound < target`.
pub fn default_truncation_order(lambda: f64, r1: f64, w0_norm: f64, horizon: f64, target: f64) -> Result<usize> {
    (0..=1000)
        .find(|&n| truncation_error_bound_from_norm(lambda, r1, w0_norm, horizon, n) < target)
        .ok_or_else(|| Error::Numerical(format!("no truncation order below 1000 reaches {target:e}")))
}

/// Partial signatures as CSV: `path_id,level,component,value` (component 1-based).
pub fn write_signatures_csv<W: Write>(d: &LabeledDataset, order: usize, mut out: W, comment: Option<&str>) -> std::io::Result<()> {
    if let Some(c) = comment {
        for line in c.lines() {
            writeln!(out, "# {line}")?;
        }
    }
    writeln!(out, "path_id,level,component,value")?;
    for (id, p) in d.paths().iter().enumerate() {
        let sig = partial_signature(p, order);
        for (k, lvl) in sig.levels.iter().enumerate() {
            for (j, v) in lvl.iter().enumerate() {
                writeln!(out, "{id},{k},{},{v}", j + 1)?;
            }
        }
    }
    Ok(())
}
