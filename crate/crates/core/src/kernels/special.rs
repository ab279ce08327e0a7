//! Bessel functions of the first and second kind, orders 0 and 1, for real
//! positive arguments.
//!
//! Below [`SERIES_LIMIT`] the ascending series are summed in double-double
//! arithmetic, above it the Hankel asymptotic expansions are used.

use super::dd::Dd;
use crate::error::{Error, Result};

/// Euler-Mascheroni constant.
#[allow(clippy::excessive_precision)]
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_860_61;

const FRAC_2_PI: f64 = std::f64::consts::FRAC_2_PI;
const SERIES_LIMIT: f64 = 20.0;

/// `J0, J1, Y0, Y1` at one argument.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bessel01 {
    pub j0: f64,
    pub j1: f64,
    pub y0: f64,
    pub y1: f64,
}

/// Evaluates all four functions at `z > 0`.
pub fn bessel01(z: f64) -> Result<Bessel01> {
    if !(z > 0.0) || !z.is_finite() {
        return Err(Error::Domain(format!("Bessel argument must be finite and positive, got {z}")));
    }
    Ok(bessel01_unchecked(z))
}

/// As [`bessel01`] without the argument check. `z` must be finite and positive.
#[inline]
pub(crate) fn bessel01_unchecked(z: f64) -> Bessel01 {
    if z <= SERIES_LIMIT {
        series(z)
    } else {
        asymptotic(z)
    }
}

/// `J0` and `J1` only; also valid at `z = 0`.
pub fn bessel_j01(z: f64) -> Result<(f64, f64)> {
    if !(z >= 0.0) || !z.is_finite() {
        return Err(Error::Domain(format!("Bessel argument must be finite and non-negative, got {z}")));
    }
    if z == 0.0 {
        return Ok((1.0, 0.0));
    }
    let b = bessel01_unchecked(z);
    Ok((b.j0, b.j1))
}

pub fn bessel_j0(z: f64) -> Result<f64> {
    bessel_j01(z).map(|v| v.0)
}

pub fn bessel_j1(z: f64) -> Result<f64> {
    bessel_j01(z).map(|v| v.1)
}

pub fn bessel_y0(z: f64) -> Result<f64> {
    bessel01(z).map(|b| b.y0)
}

pub fn bessel_y1(z: f64) -> Result<f64> {
    bessel01(z).map(|b| b.y1)
}

fn series(z: f64) -> Bessel01 {
    let half = 0.5 * z;
    let x = Dd::prod(half, half);
    let neg_x = x.neg();

    // t_k = (-x)^k / (k!)^2, u_k = t_k / (k+1)
    let mut t = Dd::from_f64(1.0);
    let mut sj0 = t;
    let mut sj1 = t;
    let mut hk = Dd::ZERO;
    let mut sy0 = Dd::ZERO;
    // sum u_k (H_k + H_{k+1}), k = 0 term is 1
    let mut sy1 = Dd::from_f64(1.0);
    let mut k = 1.0_f64;
    loop {
        t = t.mul(neg_x).div_f64(k * k);
        hk = hk.add(Dd::recip(k));
        let hk1 = hk.add(Dd::recip(k + 1.0));
        let u = t.div_f64(k + 1.0);
        sj0 = sj0.add(t);
        sj1 = sj1.add(u);
        sy0 = sy0.add(t.mul(hk));
        sy1 = sy1.add(u.mul(hk.add(hk1)));
        if k * k > x.hi && t.abs_hi() * (1.0 + 2.0 * hk.hi) < 1e-22 {
            break;
        }
        k += 1.0;
    }
    let j0 = sj0.to_f64();
    let j1 = half * sj1.to_f64();
    let lg = (half.ln() + EULER_GAMMA) * FRAC_2_PI;
    let y0 = lg * j0 - FRAC_2_PI * sy0.to_f64();
    let y1 = -FRAC_2_PI / z + lg * j1 - half * sy1.to_f64() / std::f64::consts::PI;
    Bessel01 { j0, j1, y0, y1 }
}

/// Hankel's P and Q for order `nu` (nu^2 given as `mu = 4 nu^2`).
fn hankel_pq(mu: f64, z: f64) -> (f64, f64) {
    let z8 = 8.0 * z;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term = 1.0;
    let mut k = 1.0_f64;
    let mut prev = f64::INFINITY;
    loop {
        let odd = 2.0 * k - 1.0;
        term *= (mu - odd * odd) / (k * z8);
        let a = term.abs();
        if a >= prev || a < 1e-18 {
            break;
        }
        prev = a;
        // k odd -> Q, k even -> P, with alternating signs per pair
        let kk = k as u32;
        match kk % 4 {
            1 => q += term,
            2 => p -= term,
            3 => q -= term,
            _ => p += term,
        }
        k += 1.0;
    }
    (p, q)
}

fn asymptotic(z: f64) -> Bessel01 {
    let amp = (FRAC_2_PI / z).sqrt();
    let (s, c) = z.sin_cos();
    let r = std::f64::consts::FRAC_1_SQRT_2;
    // chi0 = z - pi/4, chi1 = z - 3 pi/4
    let (c0, s0) = (r * (c + s), r * (s - c));
    let (c1, s1) = (r * (s - c), -r * (s + c));
    let (p0, q0) = hankel_pq(0.0, z);
    let (p1, q1) = hankel_pq(4.0, z);
    Bessel01 {
        j0: amp * (p0 * c0 - q0 * s0),
        y0: amp * (p0 * s0 + q0 * c0),
        j1: amp * (p1 * c1 - q1 * s1),
        y1: amp * (p1 * s1 + q1 * c1),
    }
}
