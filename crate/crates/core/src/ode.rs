//! Adaptive Dormand–Prince 5(4) integrator for smooth systems `y' = f(t, y)`.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub atol: f64,
    pub rtol: f64,
    pub max_steps: usize,
    /// Initial step; `None` picks `(t1 - t0) / 100`.
    pub first_step: Option<f64>,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            atol: 1e-12,
            rtol: 1e-10,
            max_steps: 200_000,
            first_step: None,
        }
    }
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Integrate from `t0` to `t1` starting at `y0`; returns `y(t1)`.
///
/// `f(t, y, dy)` writes the derivative into `dy`.
pub fn integrate<F>(mut f: F, t0: f64, t1: f64, y0: &[f64], opts: &OdeOptions) -> Result<Vec<f64>>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let dim = y0.len();
    let mut y = y0.to_vec();
    if t1 <= t0 || dim == 0 {
        return Ok(y);
    }
    let span = t1 - t0;
    let mut h = opts.first_step.unwrap_or(span / 100.0).min(span);
    let mut t = t0;
    let mut k: Vec<Vec<f64>> = vec![vec![0.0; dim]; 7];
    let mut stage = vec![0.0; dim];
    let mut y5 = vec![0.0; dim];
    f(t, &y, &mut k[0]);
    let mut steps = 0usize;
    while t < t1 {
        if steps >= opts.max_steps {
            return Err(Error::Numerical(format!(
                "ODE integration did not reach t={t1} within {} steps",
                opts.max_steps
            )));
        }
        steps += 1;
        let last = t + h >= t1 - 1e-14 * span;
        if last {
            h = t1 - t;
        }
        for s in 1..7 {
            for i in 0..dim {
                let mut acc = y[i];
                for (j, kj) in k.iter().enumerate().take(s) {
                    acc += h * A[s][j] * kj[i];
                }
                stage[i] = acc;
            }
            f(t + C[s] * h, &stage, &mut k[s]);
        }
        let mut err_sq = 0.0;
        for i in 0..dim {
            let mut hi = y[i];
            let mut lo = y[i];
            for (s, ks) in k.iter().enumerate() {
                hi += h * B5[s] * ks[i];
                lo += h * B4[s] * ks[i];
            }
            y5[i] = hi;
            let sc = opts.atol + opts.rtol * y[i].abs().max(hi.abs());
            let e = (hi - lo) / sc;
            err_sq += e * e;
        }
        let err = (err_sq / dim as f64).sqrt();
        if !err.is_finite() {
            return Err(Error::Numerical("ODE integration produced non-finite values".into()));
        }
        if err <= 1.0 {
            t = if last { t1 } else { t + h };
            std::mem::swap(&mut y, &mut y5);
            // FSAL: the last stage is the derivative at the new point.
            k.swap(0, 6);
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            h *= factor;
        } else {
            h *= (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
        }
        if h < 1e-14 * span {
            return Err(Error::Numerical("ODE step size underflow".into()));
        }
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn exponential_decay() {
        let y = integrate(|_, y, dy| dy[0] = -2.0 * y[0], 0.0, 3.0, &[1.0], &OdeOptions::default()).unwrap();
        assert_relative_eq!(y[0], (-6.0f64).exp(), max_relative = 1e-9);
    }

    #[test]
    fn harmonic_oscillator() {
        let y = integrate(
            |_, y, dy| {
                dy[0] = y[1];
                dy[1] = -y[0];
            },
            0.0,
            10.0,
            &[1.0, 0.0],
            &OdeOptions::default(),
        )
        .unwrap();
        assert_relative_eq!(y[0], 10f64.cos(), epsilon = 1e-8);
        assert_relative_eq!(y[1], -(10f64.sin()), epsilon = 1e-8);
    }

    #[test]
    fn step_budget_is_enforced() {
        let opts = OdeOptions {
            max_steps: 3,
            ..OdeOptions::default()
        };
        let r = integrate(|_, y, dy| dy[0] = -y[0], 0.0, 100.0, &[1.0], &opts);
        assert!(matches!(r, Err(Error::Numerical(_))));
    }
}
