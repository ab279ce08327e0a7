//! Free-space Helmholtz fundamental solution and its derivatives.

use num_complex::Complex64 as C64;

use super::special::{bessel01, bessel01_unchecked};
use crate::error::{Error, Result};
use crate::geometry::Point2;

/// Hankel functions `H0^(1)(z)` and `H1^(1)(z)`.
pub fn hankel01(z: f64) -> Result<(C64, C64)> {
    let b = bessel01(z)?;
    Ok((C64::new(b.j0, b.y0), C64::new(b.j1, b.y1)))
}

#[inline]
pub(crate) fn hankel01_unchecked(z: f64) -> (C64, C64) {
    let b = bessel01_unchecked(z);
    (C64::new(b.j0, b.y0), C64::new(b.j1, b.y1))
}

fn check(k: f64, x: Point2, y: Point2) -> Result<f64> {
    if !(k > 0.0) || !k.is_finite() {
        return Err(Error::Parameter(format!("wavenumber must be positive, got {k}")));
    }
    let r = (x - y).norm();
    if r == 0.0 {
        return Err(Error::Domain("fundamental solution evaluated at coincident points".into()));
    }
    Ok(r)
}

/// `Phi(x, y) = (i/4) H0^(1)(k |x - y|)`.
pub fn fundamental(k: f64, x: Point2, y: Point2) -> Result<C64> {
    let r = check(k, x, y)?;
    Ok(phi_r(k, r))
}

/// Gradient of `Phi` with respect to `x`; the gradient in `y` is its negative.
pub fn fundamental_grad(k: f64, x: Point2, y: Point2) -> Result<[C64; 2]> {
    check(k, x, y)?;
    Ok(grad_x(k, x, y))
}

#[inline]
pub(crate) fn phi_r(k: f64, r: f64) -> C64 {
    let (h0, _) = hankel01_unchecked(k * r);
    C64::new(0.0, 0.25) * h0
}

#[inline]
pub(crate) fn grad_x(k: f64, x: Point2, y: Point2) -> [C64; 2] {
    let d = x - y;
    let r = d.norm();
    let (_, h1) = hankel01_unchecked(k * r);
    let f = C64::new(0.0, -0.25 * k) * h1 / r;
    [f * d.x, f * d.y]
}

/// Value and derivatives of `Phi(x, y)` needed by the boundary solvers.
#[derive(Clone, Copy, Debug)]
pub(crate) struct PhiPair {
    pub phi: C64,
    /// `grad_x Phi`.
    pub gx: [C64; 2],
    d: Point2,
    r: f64,
    h0: C64,
    h1: C64,
    k: f64,
}

impl PhiPair {
    #[inline]
    pub fn new(k: f64, x: Point2, y: Point2) -> PhiPair {
        let d = x - y;
        let r = d.norm();
        let (h0, h1) = hankel01_unchecked(k * r);
        let f = C64::new(0.0, -0.25 * k) * h1 / r;
        PhiPair { phi: C64::new(0.0, 0.25) * h0, gx: [f * d.x, f * d.y], d, r, h0, h1, k }
    }

    /// `a . grad_x Phi`.
    #[inline]
    pub fn dx(&self, a: Point2) -> C64 {
        self.gx[0] * a.x + self.gx[1] * a.y
    }

    /// `b . grad_y Phi`.
    #[inline]
    pub fn dy(&self, b: Point2) -> C64 {
        -self.dx(b)
    }

    /// `(a . grad_x)(b . grad_y) Phi`.
    #[inline]
    pub fn dxdy(&self, a: Point2, b: Point2) -> C64 {
        let k = self.k;
        let r = self.r;
        let u = self.d * (1.0 / r);
        let ua = u.dot(a);
        let ub = u.dot(b);
        let z = k * r;
        let h1p = self.h0 - self.h1 / z;
        C64::new(0.0, 0.25 * k) * (h1p * (k * ua * ub) + self.h1 * ((a.dot(b) - ua * ub) / r))
    }
}
