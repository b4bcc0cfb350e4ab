//! Dense linear-algebra helpers: matrix exponential, spectral norms,
//! symmetric square roots and the spectral-norm ball projection.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

const PADE3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const PADE5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const PADE7: [f64; 8] = [
    17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0,
];
const PADE9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

// Backward-error thresholds on the 1-norm for each Padé degree.
const THETA3: f64 = 1.495585217958292e-2;
const THETA5: f64 = 2.539398330063230e-1;
const THETA7: f64 = 9.504178996162932e-1;
const THETA9: f64 = 2.097847961257068;
const THETA13: f64 = 5.371920351148152;

fn one_norm(m: &DMatrix<f64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Odd/even parts `(U, V)` of a low-degree diagonal Padé approximant.
fn pade_low(a: &DMatrix<f64>, b: &[f64]) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let ident = DMatrix::<f64>::identity(n, n);
    let a2 = a * a;
    let mut power = ident.clone();
    let mut u = ident.scale(b[1]);
    let mut v = ident.scale(b[0]);
    for k in (2..b.len()).step_by(2) {
        power = &power * &a2;
        v += power.scale(b[k]);
        if k + 1 < b.len() {
            u += power.scale(b[k + 1]);
        }
    }
    (a * u, v)
}

fn pade13(a: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let b = &PADE13;
    let ident = DMatrix::<f64>::identity(n, n);
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let inner_u = &a6 * (a6.scale(b[13]) + a4.scale(b[11]) + a2.scale(b[9]));
    let u = a * (inner_u
        + a6.scale(b[7])
        + a4.scale(b[5])
        + a2.scale(b[3])
        + ident.scale(b[1]));
    let inner_v = &a6 * (a6.scale(b[12]) + a4.scale(b[10]) + a2.scale(b[8]));
    let v = inner_v + a6.scale(b[6]) + a4.scale(b[4]) + a2.scale(b[2]) + ident.scale(b[0]);
    (u, v)
}

/// Matrix exponential by scaling and squaring with diagonal Padé
/// approximants of degree 3, 5, 7, 9 or 13, chosen from the 1-norm.
pub fn matrix_exp(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if m.nrows() != m.ncols() {
        return Err(Error::Dimension {
            context: "matrix_exp expects a square matrix",
            expected: m.nrows(),
            got: m.ncols(),
        });
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("matrix_exp: non-finite entry".into()));
    }
    let n = m.nrows();
    if n == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    let norm = one_norm(m);
    let (u, v, squarings) = if norm <= THETA3 {
        let (u, v) = pade_low(m, &PADE3);
        (u, v, 0)
    } else if norm <= THETA5 {
        let (u, v) = pade_low(m, &PADE5);
        (u, v, 0)
    } else if norm <= THETA7 {
        let (u, v) = pade_low(m, &PADE7);
        (u, v, 0)
    } else if norm <= THETA9 {
        let (u, v) = pade_low(m, &PADE9);
        (u, v, 0)
    } else {
        let s = ((norm / THETA13).log2().ceil()).max(0.0) as i32;
        let scaled = m.scale(2f64.powi(-s));
        let (u, v) = pade13(&scaled);
        (u, v, s)
    };
    let numer = &v + &u;
    let denom = &v - &u;
    let mut result = denom
        .lu()
        .solve(&numer)
        .ok_or_else(|| Error::Numerical("matrix_exp: singular Padé denominator".into()))?;
    for _ in 0..squarings {
        result = &result * &result;
    }
    Ok(result)
}

/// Largest singular value.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values().max()
}

/// Symmetric part `(M + Mᵀ)/2`.
pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()).scale(0.5)
}

/// Relative asymmetry `‖M − Mᵀ‖_F / max(‖M‖_F, tiny)`.
pub fn asymmetry(m: &DMatrix<f64>) -> f64 {
    let scale = m.norm().max(f64::MIN_POSITIVE);
    (m - m.transpose()).norm() / scale
}

/// Symmetric PSD square root; negative eigenvalues from round-off are
/// clamped at zero.
pub fn sym_sqrt(a: &DMatrix<f64>) -> DMatrix<f64> {
    sym_spectral_map(a, |l| l.max(0.0).sqrt())
}

/// Symmetric inverse square root of a positive definite matrix.
pub fn sym_inv_sqrt(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = SymmetricEigen::new(symmetrize(a));
    if eig.eigenvalues.iter().any(|&l| l <= 0.0) {
        return Err(Error::Regime(
            "inverse square root requires a positive definite matrix".into(),
        ));
    }
    Ok(rebuild(&eig, |l| 1.0 / l.sqrt()))
}

fn sym_spectral_map(a: &DMatrix<f64>, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(symmetrize(a));
    rebuild(&eig, f)
}

fn rebuild(eig: &SymmetricEigen<f64, nalgebra::Dyn>, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let q = &eig.eigenvectors;
    let d = DVector::from_iterator(eig.eigenvalues.len(), eig.eigenvalues.iter().map(|&l| f(l)));
    let mut scaled = q.clone();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        col *= d[j];
    }
    symmetrize(&(scaled * q.transpose()))
}

/// Euclidean projection onto `{u : ‖u‖ ≤ radius}` in spectral norm:
/// singular values are clipped at `radius`.
pub fn project_spectral_ball(u: &DMatrix<f64>, radius: f64) -> DMatrix<f64> {
    if spectral_norm(u) <= radius {
        return u.clone();
    }
    let mut svd = u.clone().svd(true, true);
    for s in svd.singular_values.iter_mut() {
        *s = s.min(radius);
    }
    svd.recompose().expect("u and v_t were requested")
}
