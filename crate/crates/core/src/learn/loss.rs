use libm::erfc;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::BasisMeans;
use crate::paths::Label;

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Standard normal distribution function.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Trainable parameters: input map `u` (n × r), read-out direction `ω`, shift `b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    #[serde(with = "crate::serde_matrix")]
    pub u: DMatrix<f64>,
    #[serde(with = "crate::serde_matrix::vector")]
    pub omega: DVector<f64>,
    pub b: f64,
}

impl ModelParams {
    pub fn new(u: DMatrix<f64>, omega: DVector<f64>, b: f64) -> Result<Self> {
        if u.nrows() != omega.len() {
            return Err(Error::Dimension {
                context: "omega must have one entry per row of u",
                expected: u.nrows(),
                got: omega.len(),
            });
        }
        Ok(Self { u, omega, b })
    }

    pub fn n(&self) -> usize {
        self.omega.len()
    }

    pub fn r(&self) -> usize {
        self.u.ncols()
    }

    /// `⟨ν, ω⟩ + b`.
    pub fn margin(&self, nu: &DVector<f64>) -> f64 {
        self.omega.dot(nu) + self.b
    }

    /// Checks `‖u‖ ≤ Λ` and `‖ω‖₂ = 1` up to `1e-9`.
    pub fn is_feasible(&self, lambda: f64) -> bool {
        crate::linalg::spectral_norm(&self.u) <= lambda + 1e-9 && (self.omega.norm() - 1.0).abs() <= 1e-9
    }
}

/// `√(ωᵀAω)`, the standard deviation of `⟨ω, y(T)⟩`.
pub fn direction_scale(omega: &DVector<f64>, cov: &DMatrix<f64>) -> Result<f64> {
    let variance = omega.dot(&(cov * omega));
    if !(variance > 0.0) {
        return Err(Error::DegenerateDirection { variance });
    }
    Ok(variance.sqrt())
}

/// Probability that a draw `y ~ N(ν, A)` is misclassified:
/// `Φ(−v (⟨ν,ω⟩ + b) / √(ωᵀAω))`.
pub fn loss(nu: &DVector<f64>, label: Label, params: &ModelParams, cov: &DMatrix<f64>) -> Result<f64> {
    let s = direction_scale(&params.omega, cov)?;
    Ok(normal_cdf(-label.value() * params.margin(nu) / s))
}

/// Mean of the per-example losses.
pub fn empirical_risk(means: &[DVector<f64>], labels: &[Label], params: &ModelParams, cov: &DMatrix<f64>) -> Result<f64> {
    check_lengths(means.len(), labels.len())?;
    let s = direction_scale(&params.omega, cov)?;
    let total: f64 = means
        .iter()
        .zip(labels)
        .map(|(nu, l)| normal_cdf(-l.value() * params.margin(nu) / s))
        .sum();
    Ok(total / means.len() as f64)
}

fn check_lengths(m: usize, labels: usize) -> Result<()> {
    if m == 0 {
        return Err(Error::EmptyDataset);
    }
    if m != labels {
        return Err(Error::Dimension {
            context: "one label per example",
            expected: m,
            got: labels,
        });
    }
    Ok(())
}

/// Gradient of the empirical risk with respect to `(u, ω, b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub u: DMatrix<f64>,
    pub omega: DVector<f64>,
    pub b: f64,
}

impl Gradient {
    pub fn norm(&self) -> f64 {
        (self.u.norm_squared() + self.omega.norm_squared() + self.b * self.b).sqrt()
    }
}

/// Empirical risk at `params` when each example is given by its basis means.
pub fn risk(features: &[BasisMeans], labels: &[Label], params: &ModelParams, cov: &DMatrix<f64>) -> Result<f64> {
    let means: Vec<DVector<f64>> = features.iter().map(|f| f.mean(&params.u)).collect();
    empirical_risk(&means, labels, params, cov)
}

/// Empirical risk and its exact gradient. Per example, with `s = √(ωᵀAω)`
/// and `z = (⟨ω,ν⟩ + b)/s`:
///
/// * `∂/∂u_ij = −v φ(z)/s · ⟨ω, ν_{x,e_ij}⟩`
/// * `∂/∂ω_i = −v φ(z)/s · (ν_i − (Aω)_i (⟨ω,ν⟩ + b)/s²)`
/// * `∂/∂b = −v φ(z)/s`
pub fn risk_and_gradient(
    features: &[BasisMeans],
    labels: &[Label],
    params: &ModelParams,
    cov: &DMatrix<f64>,
) -> Result<(f64, Gradient)> {
    check_lengths(features.len(), labels.len())?;
    let s = direction_scale(&params.omega, cov)?;
    let a_omega = cov * &params.omega;
    let s2 = s * s;
    let (n, r) = params.u.shape();
    let mut gu = DMatrix::zeros(n, r);
    let mut gw = DVector::zeros(n);
    let mut gb = 0.0;
    let mut total = 0.0;
    for (f, l) in features.iter().zip(labels) {
        let v = l.value();
        let nu = f.mean(&params.u);
        let margin = params.margin(&nu);
        let z = margin / s;
        total += normal_cdf(-v * z);
        let c = -v * normal_pdf(z) / s;
        gu += f.directional(&params.omega) * c;
        gw += (&nu - &a_omega * (margin / s2)) * c;
        gb += c;
    }
    let m = features.len() as f64;
    Ok((
        total / m,
        Gradient {
            u: gu / m,
            omega: gw / m,
            b: gb / m,
        },
    ))
}

pub fn risk_gradient(features: &[BasisMeans], labels: &[Label], params: &ModelParams, cov: &DMatrix<f64>) -> Result<Gradient> {
    risk_and_gradient(features, labels, params, cov).map(|(_, g)| g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn params(n: usize) -> ModelParams {
        let mut omega = DVector::zeros(n);
        omega[0] = 1.0;
        ModelParams::new(DMatrix::zeros(n, 1), omega, 0.0).unwrap()
    }

    #[test]
    fn cdf_reference_values() {
        assert_eq!(normal_cdf(0.0), 0.5);
        assert_relative_eq!(normal_cdf(-1.0), 0.158_655_253_931_457_05, max_relative = 1e-14);
        assert_relative_eq!(normal_cdf(-8.0), 6.220_960_574_271_785e-16, max_relative = 1e-12);
        assert_relative_eq!(normal_pdf(0.0), 1.0 / (2.0 * std::f64::consts::PI).sqrt(), max_relative = 1e-15);
    }

    #[test]
    fn zero_margin_gives_half() {
        let p = params(2);
        let cov = DMatrix::identity(2, 2);
        let nu = DVector::from_vec(vec![0.0, 3.0]);
        assert_eq!(loss(&nu, Label::Pos, &p, &cov).unwrap(), 0.5);
    }

    #[test]
    fn unit_margin() {
        let mut p = params(2);
        p.b = 0.5;
        let cov = DMatrix::from_row_slice(2, 2, &[4.0, 0.3, 0.3, 1.0]);
        // ⟨ν,ω⟩ + b = 2 = √(ωᵀAω)
        let nu = DVector::from_vec(vec![1.5, -7.0]);
        assert_relative_eq!(loss(&nu, Label::Pos, &p, &cov).unwrap(), 0.158_655_253_931_457_05, max_relative = 1e-14);
    }

    #[test]
    fn degenerate_direction() {
        let p = params(2);
        let cov = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 1.0]);
        let nu = DVector::zeros(2);
        assert!(matches!(loss(&nu, Label::Pos, &p, &cov), Err(Error::DegenerateDirection { .. })));
    }

    #[test]
    fn risk_errors() {
        let p = params(2);
        let cov = DMatrix::identity(2, 2);
        assert!(matches!(empirical_risk(&[], &[], &p, &cov), Err(Error::EmptyDataset)));
        let nu = DVector::zeros(2);
        assert!(matches!(empirical_risk(&[nu], &[], &p, &cov), Err(Error::Dimension { .. })));
    }

    #[test]
    fn bias_gradient_for_orthogonal_mean() {
        let p = params(3);
        let cov = DMatrix::from_diagonal(&DVector::from_vec(vec![0.25, 1.0, 2.0]));
        let f = BasisMeans {
            blocks: vec![DMatrix::from_row_slice(3, 3, &[0.0, 0.0, 0.0, 1.0, 2.0, 0.0, 0.0, 3.0, 1.0])],
        };
        let mut p2 = p.clone();
        p2.u = DMatrix::from_column_slice(3, 1, &[0.1, 0.2, 0.3]);
        let g = risk_gradient(&[f], &[Label::Neg], &p2, &cov).unwrap();
        assert_relative_eq!(g.b, normal_pdf(0.0) / 0.5, max_relative = 1e-14);
    }
}
