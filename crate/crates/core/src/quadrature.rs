//! Gauss–Legendre rules.

use std::f64::consts::PI;

/// Nodes and weights of the `q`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(q: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(q >= 1, "Gauss–Legendre rule needs at least one node");
    let mut nodes = vec![0.0; q];
    let mut weights = vec![0.0; q];
    for i in 0..q.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (q as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Three-term recurrence for P_q and its derivative.
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=q {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pq = if q == 1 { x } else { p1 };
            let pq_1 = if q == 1 { 1.0 } else { p0 };
            dp = q as f64 * (x * pq - pq_1) / (x * x - 1.0);
            let dx = pq / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        if q == 1 {
            x = 0.0;
            dp = 1.0;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[q - 1 - i] = x;
        weights[i] = w;
        weights[q - 1 - i] = w;
    }
    (nodes, weights)
}

/// Composite Gauss–Legendre rule on `[a, b]` with `panels` equal panels of
/// `q` nodes each. Returns `(nodes, weights)` in increasing node order.
pub fn composite_gauss_legendre(a: f64, b: f64, panels: usize, q: usize) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(q);
    let h = (b - a) / panels as f64;
    let mut nodes = Vec::with_capacity(panels * q);
    let mut weights = Vec::with_capacity(panels * q);
    for p in 0..panels {
        let lo = a + p as f64 * h;
        for (xi, wi) in x.iter().zip(&w) {
            nodes.push(lo + 0.5 * h * (xi + 1.0));
            weights.push(0.5 * h * wi);
        }
    }
    (nodes, weights)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn single_node_is_midpoint() {
        let (x, w) = gauss_legendre(1);
        assert_eq!(x, vec![0.0]);
        assert_relative_eq!(w[0], 2.0);
    }

    #[test]
    fn integrates_polynomials_exactly() {
        for q in 1..=20 {
            let (x, w) = gauss_legendre(q);
            assert_relative_eq!(w.iter().sum::<f64>(), 2.0, epsilon = 1e-13);
            for deg in 0..2 * q {
                let approx: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((approx - exact).abs() < 1e-13, "q={q} deg={deg}");
            }
        }
    }

    #[test]
    fn composite_rule_integrates_exp() {
        let (x, w) = composite_gauss_legendre(0.0, 3.0, 4, 16);
        let v: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.exp()).sum();
        assert_relative_eq!(v, 3f64.exp() - 1.0, max_relative = 1e-14);
    }
}
