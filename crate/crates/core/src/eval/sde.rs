//! Euler–Maruyama simulation of `dy = (W₀y + u x(t)) dt + Σ dB`, `y(0) = 0`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::paths::Path;
use crate::reservoir::ReservoirSystem;

/// Terminal states of `count` independent runs. The horizon is split into
/// `ceil(T/dt)` equal steps and the drift uses the path at the left end of
/// each step.
pub fn simulate_terminal_states<R: Rng + ?Sized>(
    path: &Path,
    u: &DMatrix<f64>,
    sys: &ReservoirSystem,
    dt: f64,
    count: usize,
    rng: &mut R,
) -> Result<Vec<DVector<f64>>> {
    if !(dt > 0.0) {
        return Err(Error::Domain(format!("time step must be positive, got {dt}")));
    }
    if u.shape() != (sys.n, path.dim()) {
        return Err(Error::Dimension {
            context: "u must be n×r",
            expected: sys.n * path.dim(),
            got: u.len(),
        });
    }
    let horizon = path.horizon();
    let steps = (horizon / dt).ceil().max(1.0) as usize;
    let h = horizon / steps as f64;
    let sqrt_h = h.sqrt();
    let forcing: Vec<DVector<f64>> = (0..steps)
        .map(|k| path.eval(k as f64 * h).map(|x| u * x))
        .collect::<Result<_>>()?;
    let n = sys.n;
    let d = sys.d;
    let mut out = Vec::with_capacity(count);
    let mut drift = DVector::zeros(n);
    let mut noise = DVector::zeros(d);
    for _ in 0..count {
        let mut y = DVector::zeros(n);
        for f in &forcing {
            drift.gemv(1.0, &sys.w0, &y, 0.0);
            drift += f;
            for v in noise.iter_mut() {
                *v = rng.sample::<f64, _>(StandardNormal) * sqrt_h;
            }
            y.axpy(h, &drift, 1.0);
            y.gemv(1.0, &sys.sigma, &noise, 1.0);
        }
        out.push(y);
    }
    Ok(out)
}

/// One Euler–Maruyama terminal state `y(T)`.
pub fn simulate_sde<R: Rng + ?Sized>(path: &Path, u: &DMatrix<f64>, sys: &ReservoirSystem, dt: f64, rng: &mut R) -> Result<DVector<f64>> {
    Ok(simulate_terminal_states(path, u, sys, dt, 1, rng)?.remove(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeded_rng;

    #[test]
    fn deterministic_limit() {
        let sys = ReservoirSystem::from_matrices(DMatrix::zeros(2, 2), DMatrix::zeros(2, 2), 2, 1.0).unwrap();
        let c = DVector::from_vec(vec![1.0, -2.0]);
        let p = Path::constant(1.0, &c).unwrap();
        for dt in [1e-2, 1e-3] {
            let y = simulate_sde(&p, &DMatrix::identity(2, 2), &sys, dt, &mut seeded_rng(0)).unwrap();
            let exact = &c * (1.0 - (-1.0f64).exp());
            assert!((y - exact).amax() < dt);
        }
    }

    #[test]
    fn zero_input_zero_noise() {
        let sys = ReservoirSystem::from_matrices(DMatrix::identity(2, 2) * 0.3, DMatrix::zeros(2, 2), 1, 1.0).unwrap();
        let p = Path::constant(1.0, &DVector::from_vec(vec![4.0])).unwrap();
        let y = simulate_sde(&p, &DMatrix::zeros(2, 1), &sys, 1e-2, &mut seeded_rng(0)).unwrap();
        assert_eq!(y, DVector::zeros(2));
    }

    #[test]
    fn rejects_bad_step() {
        let sys = ReservoirSystem::from_matrices(DMatrix::zeros(1, 1), DMatrix::identity(1, 1), 1, 1.0).unwrap();
        let p = Path::constant(1.0, &DVector::from_vec(vec![1.0])).unwrap();
        assert!(simulate_sde(&p, &DMatrix::zeros(1, 1), &sys, 0.0, &mut seeded_rng(0)).is_err());
    }
}
