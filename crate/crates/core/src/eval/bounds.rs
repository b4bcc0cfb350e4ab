//! Generalisation bounds for the class `‖ω‖₂ = 1, |b| ≤ Θ, ‖u‖ ≤ Λ` on
//! inputs of `L²` norm at most `R`.

use std::f64::consts::{E, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    pub theta: f64,
    pub lambda: f64,
    pub radius: f64,
    pub m: usize,
    /// Confidence parameter.
    pub delta: f64,
    pub lambda_min: f64,
    /// `∫₀ᵀ ‖e^{W₀t}‖² dt`.
    pub exp_norm_int: f64,
}

impl BoundInputs {
    pub fn validate(&self) -> Result<()> {
        let nonneg = [self.theta, self.lambda, self.radius, self.exp_norm_int];
        if nonneg.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Domain(format!("bound constants must be finite and nonnegative: {self:?}")));
        }
        if !(self.lambda_min > 0.0) {
            return Err(Error::Regime(format!("bound needs λ_min > 0, got {:e}", self.lambda_min)));
        }
        if self.m == 0 {
            return Err(Error::Domain("sample size must be positive".into()));
        }
        check_delta(self.delta)
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Domain(format!("confidence parameter {delta} not in (0, 1)")));
    }
    Ok(())
}

/// `4/√(2π m λ_min) (Θ + ΛR √∫‖e^{W₀t}‖²) + (2 + 5√(log(2/δ)/2))/√m`.
pub fn pac_bound(bi: &BoundInputs) -> Result<f64> {
    bi.validate()?;
    let m = bi.m as f64;
    let complexity = 4.0 / (2.0 * PI * m * bi.lambda_min).sqrt() * (bi.theta + bi.lambda * bi.radius * bi.exp_norm_int.sqrt());
    let confidence = (2.0 + 5.0 * ((2.0 / bi.delta).ln() / 2.0).sqrt()) / m.sqrt();
    Ok(complexity + confidence)
}

/// Smallest integer `m` with
/// `m ≥ (4/ε²) (4(Θ + ΛR√∫‖e^{W₀t}‖²)/√(2πλ_min) + 2 + 5√log(2/δ))²`.
pub fn sample_complexity(
    epsilon: f64,
    delta: f64,
    theta: f64,
    lambda: f64,
    radius: f64,
    lambda_min: f64,
    exp_norm_int: f64,
) -> Result<u64> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Domain(format!("accuracy parameter {epsilon} not in (0, 1)")));
    }
    BoundInputs {
        theta,
        lambda,
        radius,
        m: 1,
        delta,
        lambda_min,
        exp_norm_int,
    }
    .validate()?;
    let k = 4.0 * (theta + lambda * radius * exp_norm_int.sqrt()) / (2.0 * PI * lambda_min).sqrt()
        + 2.0
        + 5.0 * (2.0 / delta).ln().sqrt();
    let m = 4.0 / (epsilon * epsilon) * k * k;
    if !m.is_finite() || m > u64::MAX as f64 {
        return Err(Error::Numerical(format!("sample complexity overflows: {m:e}")));
    }
    Ok(m.ceil() as u64)
}

/// `R̂ + √(2(n+1) log(e m/(n+1))/m) + √(log(1/δ)/(2m))` for hyperplanes in `ℝⁿ`.
pub fn vc_bound(risk_hat: f64, n: usize, m: usize, delta: f64) -> Result<f64> {
    check_delta(delta)?;
    if m <= n + 1 {
        return Err(Error::Domain(format!("VC bound needs m > n + 1, got m = {m}, n = {n}")));
    }
    let (mf, d) = (m as f64, (n + 1) as f64);
    Ok(risk_hat + (2.0 * d * (E * mf / d).ln() / mf).sqrt() + ((1.0 / delta).ln() / (2.0 * mf)).sqrt())
}
