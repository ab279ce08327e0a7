//! Dense LU with a condition estimate.

use faer::linalg::solvers::{PartialPivLu, Solve};
use faer::{Mat, MatRef};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Threshold above which a factorization is reported as ill-conditioned.
pub const COND_LIMIT: f64 = 1e14;

pub struct Lu {
    lu: PartialPivLu<C64>,
    pub cond_estimate: f64,
}

fn norm1(a: MatRef<'_, C64>) -> f64 {
    (0..a.ncols())
        .map(|j| (0..a.nrows()).map(|i| a[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

impl Lu {
    /// Factors `a`, failing on non-finite input, exact singularity or a
    /// condition estimate above [`COND_LIMIT`].
    pub fn new(a: MatRef<'_, C64>, what: &str) -> Result<Lu> {
        let n = a.nrows();
        if n != a.ncols() {
            return Err(Error::Parameter(format!("{what}: matrix is not square")));
        }
        for j in 0..n {
            for i in 0..n {
                let v = a[(i, j)];
                if !(v.re.is_finite() && v.im.is_finite()) {
                    return Err(Error::Singular(format!("{what}: non-finite entry at ({i}, {j})")));
                }
            }
        }
        let lu = a.partial_piv_lu();
        let u = lu.U();
        if (0..n).any(|i| u[(i, i)].norm() == 0.0) {
            return Err(Error::Singular(format!("{what}: zero pivot")));
        }
        let mut out = Lu { lu, cond_estimate: 0.0 };
        out.cond_estimate = norm1(a) * out.inverse_norm1_estimate(n);
        if !(out.cond_estimate <= COND_LIMIT) {
            return Err(Error::IllConditioned { what: what.to_string(), estimate: out.cond_estimate });
        }
        Ok(out)
    }

    /// Hager-Higham estimate of `||A^{-1}||_1`.
    fn inverse_norm1_estimate(&self, n: usize) -> f64 {
        let mut x = Mat::<C64>::from_fn(n, 1, |_, _| C64::new(1.0 / n as f64, 0.0));
        let mut est = 0.0;
        let mut last = usize::MAX;
        for _ in 0..5 {
            let y = self.lu.solve(&x);
            est = (0..n).map(|i| y[(i, 0)].norm()).sum::<f64>();
            let xi = Mat::<C64>::from_fn(n, 1, |i, _| {
                let v = y[(i, 0)];
                let a = v.norm();
                if a == 0.0 {
                    C64::new(1.0, 0.0)
                } else {
                    v / a
                }
            });
            let z = self.lu.solve_adjoint(&xi);
            let (mut jmax, mut zmax) = (0, 0.0);
            for i in 0..n {
                let a = z[(i, 0)].norm();
                if a > zmax {
                    zmax = a;
                    jmax = i;
                }
            }
            let zx: f64 = (0..n).map(|i| (z[(i, 0)].conj() * x[(i, 0)]).re).sum();
            if zmax <= zx || jmax == last {
                break;
            }
            last = jmax;
            x = Mat::<C64>::from_fn(n, 1, |i, _| if i == jmax { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) });
        }
        est
    }

    pub fn solve(&self, b: MatRef<'_, C64>) -> Mat<C64> {
        self.lu.solve(b)
    }

    pub fn solve_vec(&self, b: &[C64]) -> Vec<C64> {
        let m = Mat::<C64>::from_fn(b.len(), 1, |i, _| b[i]);
        let x = self.lu.solve(&m);
        (0..b.len()).map(|i| x[(i, 0)]).collect()
    }
}
