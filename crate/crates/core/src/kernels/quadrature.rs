//! Quadrature weights: Kress logarithmic product weights and Gauss-Legendre.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Kress weights `R_n` for `n = 0..N` on an even `N`-point uniform grid.
///
/// `sum_k R_{|j-k|} f(t_k)` integrates `ln(4 sin^2((t_j - t)/2)) f(t)` over a
/// period for trigonometric `f`.
pub fn kress_log_weights(n_nodes: usize) -> Result<Vec<f64>> {
    if n_nodes < 2 || !n_nodes.is_multiple_of(2) {
        return Err(Error::Parameter(format!("Kress weights need an even node count >= 2, got {n_nodes}")));
    }
    let nf = n_nodes as f64;
    let half = n_nodes / 2;
    let mut out = Vec::with_capacity(n_nodes);
    for n in 0..n_nodes {
        let mut s = 0.0;
        for m in 1..half {
            s += (2.0 * PI * (m * n % n_nodes) as f64 / nf).cos() / m as f64;
        }
        // m = N/2 term: cos(n pi) = (-1)^n
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        s += sign / half as f64;
        out.push(-4.0 * PI / nf * s - 4.0 * PI / (nf * nf) * sign);
    }
    Ok(out)
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`, nodes ascending.
pub fn gauss_legendre(m: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if m == 0 {
        return Err(Error::Parameter("Gauss-Legendre rule needs at least one node".into()));
    }
    let mut x = vec![0.0; m];
    let mut w = vec![0.0; m];
    let mf = m as f64;
    for i in 0..m.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (mf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(m, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                let (_, d) = legendre_with_derivative(m, z);
                dp = d;
                break;
            }
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[m - 1 - i] = z;
        w[i] = wi;
        w[m - 1 - i] = wi;
    }
    if m % 2 == 1 {
        x[m / 2] = 0.0;
    }
    Ok((x, w))
}

fn legendre_with_derivative(m: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    for j in 2..=m {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * z * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    if m == 1 {
        return (z, 1.0);
    }
    let d = m as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}
