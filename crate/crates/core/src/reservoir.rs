//! The fixed random reservoir `(W, Σ)` and the constants of the Gaussian
//! hidden-state law: `W₀ = W − I`, the terminal covariance
//! `A = ∫₀ᵀ e^{W₀(T−s)} ΣΣᵀ e^{W₀ᵀ(T−s)} ds`, its smallest eigenvalue and
//! `∫₀ᵀ ‖e^{W₀(T−s)}‖² ds`.

use std::fs;
use std::path::Path as FsPath;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{asymmetry, matrix_exp, spectral_norm, sym_sqrt, symmetrize};
use crate::ode::{integrate, OdeOptions};
use crate::quadrature::composite_gauss_legendre;
use crate::seeded_rng;

/// Scale of the connectivity entries: standard deviation `0.9 / √n`.
pub const CONNECTIVITY_SCALE: f64 = 0.9;
pub const DEFAULT_COVARIANCE_TOL: f64 = 1e-9;
pub const DEFAULT_EXP_NORM_PANELS: usize = 8;
const EXP_NORM_NODES_PER_PANEL: usize = 32;

/// `n × n` connectivity with i.i.d. `N(0, (0.9/√n)²)` entries, filled row by row.
pub fn gen_connectivity(n: usize, seed: u64) -> Result<DMatrix<f64>> {
    if n == 0 {
        return Err(Error::Domain("reservoir dimension must be at least 1".into()));
    }
    let dist = Normal::new(0.0, CONNECTIVITY_SCALE / (n as f64).sqrt()).expect("positive std");
    let mut rng = seeded_rng(seed);
    Ok(DMatrix::from_row_iterator(n, n, (0..n * n).map(|_| dist.sample(&mut rng))))
}

/// A noise matrix `Σ = δ·Uᵀ diag(λ) U` together with the drawn spectrum.
#[derive(Debug, Clone)]
pub struct NoiseDraw {
    pub matrix: DMatrix<f64>,
    /// The `λᵢ ∈ (0, 1)` before scaling by `δ`.
    pub spectrum: DVector<f64>,
}

/// Haar-distributed orthogonal matrix: QR of a Gaussian matrix with the
/// signs of `R`'s diagonal moved into `Q`.
pub fn haar_orthogonal<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, n, |_, _| StandardNormal.sample(rng));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for (j, mut col) in q.column_iter_mut().enumerate() {
        if r[(j, j)] < 0.0 {
            col.neg_mut();
        }
    }
    q
}

pub fn gen_noise_matrix(n: usize, delta: f64, seed: u64) -> Result<NoiseDraw> {
    if n == 0 {
        return Err(Error::Domain("noise dimension must be at least 1".into()));
    }
    if !(delta >= 0.0) || !delta.is_finite() {
        return Err(Error::Domain(format!("noise scale must be finite and non-negative, got {delta}")));
    }
    let mut rng = seeded_rng(seed);
    let spectrum = DVector::from_fn(n, |_, _| loop {
        let l: f64 = rng.random();
        if l > 0.0 {
            break l;
        }
    });
    let u = haar_orthogonal(n, &mut rng);
    let matrix = symmetrize(&(u.transpose() * DMatrix::from_diagonal(&spectrum) * &u)).scale(delta);
    Ok(NoiseDraw { matrix, spectrum })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum CovarianceMethod {
    /// Adaptive integration of `A' = ΣΣᵀ + W₀A + AW₀ᵀ`, `A(0) = 0`.
    #[default]
    Ode,
    /// Composite Gauss–Legendre quadrature (8 panels × 64 nodes) of the
    /// defining integral.
    Quadrature,
}

/// Terminal covariance `A`, symmetrised.
pub fn compute_covariance(
    w0: &DMatrix<f64>,
    sigma: &DMatrix<f64>,
    horizon: f64,
    tol: f64,
    method: CovarianceMethod,
) -> Result<DMatrix<f64>> {
    let n = w0.nrows();
    if w0.ncols() != n || sigma.nrows() != n {
        return Err(Error::Dimension {
            context: "W0 must be n×n and Sigma n×d",
            expected: n,
            got: if w0.ncols() != n { w0.ncols() } else { sigma.nrows() },
        });
    }
    if !(horizon > 0.0) {
        return Err(Error::Domain(format!("horizon must be positive, got {horizon}")));
    }
    let q = sigma * sigma.transpose();
    let a = match method {
        CovarianceMethod::Ode => covariance_ode(w0, &q, horizon, tol)?,
        CovarianceMethod::Quadrature => covariance_quadrature(w0, &q, horizon, 8, 64)?,
    };
    Ok(symmetrize(&a))
}

fn covariance_ode(w0: &DMatrix<f64>, q: &DMatrix<f64>, horizon: f64, tol: f64) -> Result<DMatrix<f64>> {
    let n = w0.nrows();
    let w0t = w0.transpose();
    let opts = OdeOptions {
        atol: 1e-3 * tol / n as f64,
        rtol: 1e-3 * tol,
        max_steps: 1_000_000,
        first_step: Some(horizon / 64.0),
    };
    let rhs = |_: f64, y: &[f64], dy: &mut [f64]| {
        let a = DMatrix::from_column_slice(n, n, y);
        let d = q + w0 * &a + &a * &w0t;
        dy.copy_from_slice(d.as_slice());
    };
    let y = integrate(rhs, 0.0, horizon, &vec![0.0; n * n], &opts)?;
    Ok(DMatrix::from_column_slice(n, n, &y))
}

/// `∫₀ᵀ e^{W₀τ} Q e^{W₀ᵀτ} dτ` with `panels × q` Gauss–Legendre nodes.
pub fn covariance_quadrature(
    w0: &DMatrix<f64>,
    q: &DMatrix<f64>,
    horizon: f64,
    panels: usize,
    nodes: usize,
) -> Result<DMatrix<f64>> {
    let n = w0.nrows();
    let (x, w) = composite_gauss_legendre(0.0, horizon, panels, nodes);
    let mut acc = DMatrix::zeros(n, n);
    for (tau, wt) in x.iter().zip(&w) {
        let e = matrix_exp(&(w0 * *tau))?;
        acc += (&e * q * e.transpose()).scale(*wt);
    }
    Ok(acc)
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(a: &DMatrix<f64>) -> Result<f64> {
    if a.nrows() != a.ncols() {
        return Err(Error::Dimension {
            context: "min_eigenvalue expects a square matrix",
            expected: a.nrows(),
            got: a.ncols(),
        });
    }
    let asym = asymmetry(a);
    if asym > 1e-10 {
        return Err(Error::Domain(format!("matrix is not symmetric (relative asymmetry {asym:e})")));
    }
    Ok(SymmetricEigen::new(symmetrize(a)).eigenvalues.min())
}

/// `∫₀ᵀ ‖e^{W₀(T−s)}‖² ds` (spectral norm) with the default 256-node rule.
pub fn exp_norm_integral(w0: &DMatrix<f64>, horizon: f64) -> Result<f64> {
    exp_norm_integral_with(w0, horizon, DEFAULT_EXP_NORM_PANELS)
}

/// As [`exp_norm_integral`] with `panels × 32` Gauss–Legendre nodes.
pub fn exp_norm_integral_with(w0: &DMatrix<f64>, horizon: f64, panels: usize) -> Result<f64> {
    if !(horizon > 0.0) {
        return Err(Error::Domain(format!("horizon must be positive, got {horizon}")));
    }
    let (x, w) = composite_gauss_legendre(0.0, horizon, panels, EXP_NORM_NODES_PER_PANEL);
    let mut acc = 0.0;
    for (tau, wt) in x.iter().zip(&w) {
        let s = spectral_norm(&matrix_exp(&(w0 * *tau))?);
        acc += wt * s * s;
    }
    Ok(acc)
}

/// Everything needed to regenerate a reservoir.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReservoirSpec {
    /// Hidden dimension; the Brownian dimension equals it.
    pub n: usize,
    /// Input dimension.
    pub r: usize,
    pub horizon: f64,
    pub noise_scale: f64,
    pub connectivity_seed: u64,
    pub noise_seed: u64,
}

/// The fixed random network and the derived constants of its Gaussian law.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReservoirSystem {
    /// `None` when built from explicit matrices.
    pub spec: Option<ReservoirSpec>,
    pub n: usize,
    pub r: usize,
    pub d: usize,
    pub horizon: f64,
    #[serde(with = "crate::serde_matrix")]
    pub w: DMatrix<f64>,
    #[serde(with = "crate::serde_matrix")]
    pub w0: DMatrix<f64>,
    #[serde(with = "crate::serde_matrix")]
    pub sigma: DMatrix<f64>,
    #[serde(with = "crate::serde_matrix")]
    pub cov: DMatrix<f64>,
    /// Symmetric square root of `cov`, used to sample `N(ν, A)`.
    #[serde(with = "crate::serde_matrix")]
    pub cov_sqrt: DMatrix<f64>,
    pub lambda_min: f64,
    pub exp_norm_int: f64,
}

impl ReservoirSystem {
    pub fn build(spec: ReservoirSpec) -> Result<Self> {
        let w = gen_connectivity(spec.n, spec.connectivity_seed)?;
        let sigma = gen_noise_matrix(spec.n, spec.noise_scale, spec.noise_seed)?.matrix;
        let mut sys = Self::from_matrices(w, sigma, spec.r, spec.horizon)?;
        sys.spec = Some(spec);
        Ok(sys)
    }

    pub fn from_matrices(w: DMatrix<f64>, sigma: DMatrix<f64>, r: usize, horizon: f64) -> Result<Self> {
        Self::from_matrices_with(w, sigma, r, horizon, CovarianceMethod::Ode, DEFAULT_COVARIANCE_TOL)
    }

    pub fn from_matrices_with(
        w: DMatrix<f64>,
        sigma: DMatrix<f64>,
        r: usize,
        horizon: f64,
        method: CovarianceMethod,
        tol: f64,
    ) -> Result<Self> {
        let n = w.nrows();
        if r == 0 {
            return Err(Error::Domain("input dimension must be at least 1".into()));
        }
        let w0 = &w - DMatrix::identity(n, n);
        let cov = compute_covariance(&w0, &sigma, horizon, tol, method)?;
        let lambda_min = min_eigenvalue(&cov)?;
        let exp_norm_int = exp_norm_integral(&w0, horizon)?;
        let cov_sqrt = sym_sqrt(&cov);
        Ok(Self {
            spec: None,
            n,
            r,
            d: sigma.ncols(),
            horizon,
            w,
            w0,
            sigma,
            cov,
            cov_sqrt,
            lambda_min,
            exp_norm_int,
        })
    }

    /// `A` is positive definite: the robust regime.
    pub fn is_definite(&self) -> bool {
        self.lambda_min > 0.0
    }

    pub fn w0_norm(&self) -> f64 {
        spectral_norm(&self.w0)
    }

    pub fn save_json(&self, path: &FsPath) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load_json(path: &FsPath) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}
