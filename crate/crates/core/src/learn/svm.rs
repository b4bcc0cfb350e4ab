//! Soft-margin SVM on whitened means `z = A^{-1/2} ν`, for comparison with
//! the stochastic ERM. The dual
//!
//! `max Σθ_i − ½‖Σ θ_i v_i z_i‖²` s.t. `0 ≤ θ_i ≤ λ`, `⟨θ, v⟩ = 0`
//!
//! is solved by sequential minimal optimisation with maximal violating pairs.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::sym_inv_sqrt;
use crate::paths::Label;

pub const DEFAULT_KKT_TOL: f64 = 1e-6;
const MAX_SWEEPS: usize = 10_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmSolution {
    #[serde(with = "crate::serde_matrix::vector")]
    pub alpha: DVector<f64>,
    pub b: f64,
    #[serde(with = "crate::serde_matrix::vector")]
    pub theta: DVector<f64>,
    /// `false` when no multiplier lies strictly inside `(0, λ)` and `b` is
    /// the midpoint of its feasible interval.
    pub b_from_free_sv: bool,
    pub iterations: usize,
    pub primal_objective: f64,
    pub dual_objective: f64,
    /// `A^{-1/2}`.
    #[serde(with = "crate::serde_matrix")]
    pub whitening: DMatrix<f64>,
}

impl SvmSolution {
    /// `⟨α, A^{-1/2}ν⟩ + b`.
    pub fn decision(&self, nu: &DVector<f64>) -> f64 {
        self.alpha.dot(&(&self.whitening * nu)) + self.b
    }

    pub fn classify(&self, nu: &DVector<f64>) -> Label {
        Label::from_sign(self.decision(nu))
    }

    pub fn support_vectors(&self) -> Vec<usize> {
        self.theta.iter().enumerate().filter(|(_, t)| **t > 0.0).map(|(i, _)| i).collect()
    }
}

/// Fits the SVM with regularisation `lambda_reg` on the whitened means.
pub fn svm_baseline(means: &[DVector<f64>], labels: &[Label], cov: &DMatrix<f64>, lambda_reg: f64) -> Result<SvmSolution> {
    let whitening = sym_inv_sqrt(cov)?;
    let z: Vec<DVector<f64>> = means.iter().map(|nu| &whitening * nu).collect();
    let mut sol = svm_dual(&z, labels, lambda_reg, DEFAULT_KKT_TOL)?;
    sol.whitening = whitening;
    Ok(sol)
}

/// Linear soft-margin SVM on the given feature vectors.
pub fn svm_dual(z: &[DVector<f64>], labels: &[Label], lambda_reg: f64, tol: f64) -> Result<SvmSolution> {
    let m = z.len();
    if m == 0 {
        return Err(Error::EmptyDataset);
    }
    if labels.len() != m {
        return Err(Error::Dimension {
            context: "one label per example",
            expected: m,
            got: labels.len(),
        });
    }
    if !(lambda_reg > 0.0) {
        return Err(Error::Domain(format!("SVM regularisation must be positive, got {lambda_reg}")));
    }
    if !labels.contains(&Label::Pos) || !labels.contains(&Label::Neg) {
        return Err(Error::Domain("SVM needs both labels present".into()));
    }
    let dim = z[0].len();
    let y: Vec<f64> = labels.iter().map(|l| l.value()).collect();
    let gram = DMatrix::from_fn(m, m, |i, j| z[i].dot(&z[j]));
    let c = lambda_reg;
    let mut theta = vec![0.0; m];
    // gradient of ½θᵀQθ − Σθ with Q_ij = y_i y_j ⟨z_i, z_j⟩
    let mut grad = vec![-1.0; m];
    let up = |t: usize, th: &[f64]| (y[t] > 0.0 && th[t] < c) || (y[t] < 0.0 && th[t] > 0.0);
    let low = |t: usize, th: &[f64]| (y[t] > 0.0 && th[t] > 0.0) || (y[t] < 0.0 && th[t] < c);

    let mut iterations = 0;
    loop {
        let mut i = usize::MAX;
        let mut gmax = f64::NEG_INFINITY;
        let mut j = usize::MAX;
        let mut gmin = f64::INFINITY;
        for t in 0..m {
            let v = -y[t] * grad[t];
            if up(t, &theta) && v > gmax {
                gmax = v;
                i = t;
            }
            if low(t, &theta) && v < gmin {
                gmin = v;
                j = t;
            }
        }
        if i == usize::MAX || j == usize::MAX || gmax - gmin < tol {
            break;
        }
        if iterations >= MAX_SWEEPS {
            return Err(Error::Numerical("SVM solver did not reach the KKT tolerance".into()));
        }
        iterations += 1;

        // move θ_i by y_i·t and θ_j by −y_j·t along the equality constraint
        let quad = (gram[(i, i)] + gram[(j, j)] - 2.0 * gram[(i, j)]).max(1e-12);
        let mut t = (gmax - gmin) / quad;
        let cap = |k: usize, dir: f64, th: &[f64]| if dir > 0.0 { c - th[k] } else { th[k] };
        t = t.min(cap(i, y[i], &theta)).min(cap(j, -y[j], &theta));
        let di = y[i] * t;
        let dj = -y[j] * t;
        theta[i] += di;
        theta[j] += dj;
        for k in 0..m {
            grad[k] += y[k] * (y[i] * gram[(k, i)] * di + y[j] * gram[(k, j)] * dj);
        }
        for &k in &[i, j] {
            if theta[k] < 1e-15 * c {
                theta[k] = 0.0;
            } else if theta[k] > c * (1.0 - 1e-15) {
                theta[k] = c;
            }
        }
    }

    let mut alpha = DVector::zeros(dim);
    for k in 0..m {
        if theta[k] != 0.0 {
            alpha += &z[k] * (theta[k] * y[k]);
        }
    }
    // y_t G_t = ⟨α, z_t⟩ − y_t, so b = −y_t G_t on free multipliers
    let mut free_sum = 0.0;
    let mut free = 0usize;
    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    for t in 0..m {
        let yg = y[t] * grad[t];
        if theta[t] >= c {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if theta[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free_sum += yg;
            free += 1;
        }
    }
    let (rho, b_from_free_sv) = if free > 0 {
        (free_sum / free as f64, true)
    } else {
        (0.5 * (ub + lb), false)
    };
    let b = -rho;
    let hinge: f64 = (0..m).map(|k| (1.0 - y[k] * (alpha.dot(&z[k]) + b)).max(0.0)).sum();
    let half_norm = 0.5 * alpha.norm_squared();
    let theta = DVector::from_vec(theta);
    Ok(SvmSolution {
        primal_objective: half_norm + c * hinge,
        dual_objective: theta.sum() - half_norm,
        alpha,
        b,
        theta,
        b_from_free_sv,
        iterations,
        whitening: DMatrix::identity(dim, dim),
    })
}
