//! Single- and double-layer operators with Kress logarithmic quadrature,
//! the Neumann-to-Dirichlet map and potential evaluation.
//!
//! Densities are sampled on the uniform computational grid. Normal
//! derivatives are carried in scaled form `phi_j = sigma_j dnu u(x_j)` so that
//! every quadrature is `sum_j h_j kernel_j phi_j`.

use std::f64::consts::PI;
use std::ops::Range;

use faer::Mat;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::geometry::{BoundaryMesh, Point2};
use crate::kernels::{hankel01_unchecked, kress_log_weights, PhiPair, EULER_GAMMA};
use crate::linalg::Lu;

/// Nodes of several closed curves, concatenated.
#[derive(Clone, Debug, Default)]
pub struct Boundary {
    pub points: Vec<Point2>,
    pub normals: Vec<Point2>,
    pub sigma: Vec<f64>,
    pub kappa: Vec<f64>,
    pub corner: Vec<bool>,
    /// Grid spacing of the owning curve.
    pub h: Vec<f64>,
    pub ranges: Vec<Range<usize>>,
}

impl Boundary {
    pub fn new(meshes: &[&BoundaryMesh]) -> Boundary {
        let mut b = Boundary::default();
        for m in meshes {
            let start = b.points.len();
            b.points.extend_from_slice(&m.points);
            b.normals.extend_from_slice(&m.normals);
            b.sigma.extend_from_slice(&m.sigma);
            b.kappa.extend_from_slice(&m.kappa);
            b.corner.extend_from_slice(&m.corner);
            b.h.extend(std::iter::repeat_n(m.h, m.len()));
            b.ranges.push(start..b.points.len());
        }
        b
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Quadrature weight `h_j sigma_j`.
    #[inline]
    pub fn weight(&self, j: usize) -> f64 {
        self.h[j] * self.sigma[j]
    }

    pub fn translated(&self, d: Point2) -> Boundary {
        let mut b = self.clone();
        for p in &mut b.points {
            *p = *p + d;
        }
        b
    }

    /// Minimum distance from `x` to any node.
    pub fn distance_to(&self, x: Point2) -> f64 {
        self.points.iter().map(|p| (*p - x).norm()).fold(f64::INFINITY, f64::min)
    }

    fn curve_of(&self) -> Vec<usize> {
        let mut c = vec![0; self.len()];
        for (i, r) in self.ranges.iter().enumerate() {
            for j in r.clone() {
                c[j] = i;
            }
        }
        c
    }
}

/// Discretized `S`, `K` and the Laplace jump correction `D = K_0 1`.
pub struct LayerOps {
    pub s: Mat<C64>,
    pub k: Mat<C64>,
    pub d: Vec<f64>,
}

fn check_k(k: f64) -> Result<()> {
    if !(k > 0.0) || !k.is_finite() {
        return Err(Error::Parameter(format!("wavenumber must be positive, got {k}")));
    }
    Ok(())
}

impl LayerOps {
    /// Assembles the operators on `b` for wavenumber `k`.
    pub fn assemble(k: f64, b: &Boundary) -> Result<LayerOps> {
        check_k(k)?;
        let n = b.len();
        let curve = b.curve_of();
        let weights: Vec<Vec<f64>> =
            b.ranges.iter().map(|r| kress_log_weights(r.len())).collect::<Result<_>>()?;
        let mut s = Mat::<C64>::zeros(n, n);
        let mut kk = Mat::<C64>::zeros(n, n);
        let mut d = vec![0.0; n];
        let half_i = C64::new(0.0, 0.5);
        let diag_const = C64::new(0.0, 0.5) - EULER_GAMMA / PI;

        for i in 0..n {
            let ci = curve[i];
            let start = b.ranges[ci].start;
            let nc = b.ranges[ci].len();
            if !b.corner[i] {
                let r0 = weights[ci][0];
                s[(i, i)] = r0 * (-0.5 / PI) + b.h[i] * (diag_const - ((0.5 * k * b.sigma[i]).ln()) / PI);
            }
            let kd = b.h[i] * b.kappa[i] / (2.0 * PI);
            kk[(i, i)] = C64::new(kd, 0.0);
            d[i] += kd;

            for j in i + 1..n {
                let x = b.points[i];
                let y = b.points[j];
                let dv = y - x;
                let r = dv.norm();
                if r == 0.0 {
                    return Err(Error::Meshing(format!("coincident boundary nodes {i} and {j}")));
                }
                let (h0, h1) = hankel01_unchecked(k * r);
                let m = half_i * h0;
                // C(i <- j) = (y - x) . nu_j sigma_j, C(j <- i) = (x - y) . nu_i sigma_i
                let cij = dv.dot(b.normals[j]) * b.sigma[j];
                let cji = -dv.dot(b.normals[i]) * b.sigma[i];
                let lfac = C64::new(0.0, -0.5 * k) * h1 / r;
                let lij = lfac * cij;
                let lji = lfac * cji;
                let r2 = r * r;
                d[i] += b.h[j] * (-cij / (PI * r2));
                d[j] += b.h[i] * (-cji / (PI * r2));
                if curve[j] == ci {
                    let h = b.h[i];
                    let off = (j - start + nc - (i - start)) % nc;
                    let w = weights[ci][off];
                    let dt = h * off as f64;
                    let lg = (4.0 * (0.5 * dt).sin().powi(2)).ln();
                    let m1 = -h0.re / (2.0 * PI);
                    let m2 = m - m1 * lg;
                    let sv = w * m1 + h * m2;
                    let jfac = k * h1.re / (2.0 * PI * r);
                    let (l1ij, l1ji) = (jfac * cij, jfac * cji);
                    s[(i, j)] = sv;
                    s[(j, i)] = sv;
                    kk[(i, j)] = w * l1ij + h * (lij - l1ij * lg);
                    kk[(j, i)] = w * l1ji + h * (lji - l1ji * lg);
                } else {
                    s[(i, j)] = b.h[j] * m;
                    s[(j, i)] = b.h[i] * m;
                    kk[(i, j)] = b.h[j] * lij;
                    kk[(j, i)] = b.h[i] * lji;
                }
            }
        }
        Ok(LayerOps { s, k: kk, d })
    }

    /// `N = (K - D)^{-1} S`, mapping scaled normal derivatives to traces of
    /// fields radiating into the region the normals point away from.
    pub fn ntd(&self) -> Result<Mat<C64>> {
        let n = self.d.len();
        let mut a = self.k.clone();
        for i in 0..n {
            a[(i, i)] -= self.d[i];
        }
        let lu = Lu::new(a.as_ref(), "interior Neumann-to-Dirichlet map (K - D)")?;
        Ok(lu.solve(self.s.as_ref()))
    }
}

/// Point sources used as right-hand sides.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Source {
    /// `Phi(x, y)`.
    Monopole(Point2),
    /// `d . grad_y Phi(x, y)`.
    Dipole(Point2, Point2),
}

impl Source {
    pub fn point(&self) -> Point2 {
        match self {
            Source::Monopole(y) | Source::Dipole(y, _) => *y,
        }
    }

    /// Value at `x`.
    #[inline]
    pub fn value(&self, k: f64, x: Point2) -> C64 {
        match *self {
            Source::Monopole(y) => PhiPair::new(k, x, y).phi,
            Source::Dipole(y, d) => PhiPair::new(k, x, y).dy(d),
        }
    }

    /// `a . grad_x` at `x`.
    #[inline]
    pub fn deriv(&self, k: f64, x: Point2, a: Point2) -> C64 {
        match *self {
            Source::Monopole(y) => PhiPair::new(k, x, y).dx(a),
            Source::Dipole(y, d) => PhiPair::new(k, x, y).dxdy(a, d),
        }
    }
}

/// Traces and scaled normal derivatives of the sources on `b`, one column
/// per source.
pub fn source_traces(k: f64, b: &Boundary, sources: &[Source]) -> Result<(Mat<C64>, Mat<C64>)> {
    check_k(k)?;
    let n = b.len();
    for (c, s) in sources.iter().enumerate() {
        if b.distance_to(s.point()) == 0.0 {
            return Err(Error::Domain(format!("source {c} coincides with a boundary node")));
        }
    }
    let mut t = Mat::<C64>::zeros(n, sources.len());
    let mut dn = Mat::<C64>::zeros(n, sources.len());
    for (c, s) in sources.iter().enumerate() {
        for l in 0..n {
            let x = b.points[l];
            let (y, dir) = match *s {
                Source::Monopole(y) => (y, None),
                Source::Dipole(y, d) => (y, Some(d)),
            };
            let p = PhiPair::new(k, x, y);
            match dir {
                None => {
                    t[(l, c)] = p.phi;
                    dn[(l, c)] = p.dx(b.normals[l]) * b.sigma[l];
                }
                Some(d) => {
                    t[(l, c)] = p.dy(d);
                    dn[(l, c)] = p.dxdy(b.normals[l], d) * b.sigma[l];
                }
            }
        }
    }
    Ok((t, dn))
}

/// Matrices `(A, B)` with `u(x_t) = (A phi + B psi)_t` for the representation
/// `u(x) = sum_j h_j [Phi(x, y_j) phi_j - dnu(y) Phi(x, y_j) sigma_j psi_j]`.
///
/// With `dirs` given, row `t` holds the derivative `dirs[t] . grad_x`.
pub fn representation(k: f64, b: &Boundary, targets: &[Point2], dirs: Option<&[Point2]>) -> Result<(Mat<C64>, Mat<C64>)> {
    check_k(k)?;
    let n = b.len();
    let mut a = Mat::<C64>::zeros(targets.len(), n);
    let mut bm = Mat::<C64>::zeros(targets.len(), n);
    for (t, &x) in targets.iter().enumerate() {
        for j in 0..n {
            let y = b.points[j];
            if x == y {
                return Err(Error::Domain(format!("target {t} coincides with boundary node {j}")));
            }
            if b.sigma[j] == 0.0 {
                continue;
            }
            let p = PhiPair::new(k, x, y);
            let nu = b.normals[j];
            let (va, vb) = match dirs {
                None => (p.phi, p.dy(nu)),
                Some(ds) => (p.dx(ds[t]), p.dxdy(ds[t], nu)),
            };
            a[(t, j)] = b.h[j] * va;
            bm[(t, j)] = -b.weight(j) * vb;
        }
    }
    Ok((a, bm))
}

/// Evaluates the representation at one point.
pub fn potential(k: f64, b: &Boundary, psi: &[C64], phi: &[C64], x: Point2) -> Result<C64> {
    let (a, bm) = representation(k, b, &[x], None)?;
    Ok((0..b.len()).map(|j| a[(0, j)] * phi[j] + bm[(0, j)] * psi[j]).sum())
}

/// Gradient of the representation at one point.
pub fn potential_grad(k: f64, b: &Boundary, psi: &[C64], phi: &[C64], x: Point2) -> Result<[C64; 2]> {
    let mut g = [C64::new(0.0, 0.0); 2];
    for (c, e) in [Point2::new(1.0, 0.0), Point2::new(0.0, 1.0)].into_iter().enumerate() {
        let (a, bm) = representation(k, b, &[x], Some(&[e]))?;
        g[c] = (0..b.len()).map(|j| a[(0, j)] * phi[j] + bm[(0, j)] * psi[j]).sum();
    }
    Ok(g)
}

/// `y = M x` for a dense matrix and a slice.
pub fn matvec(m: &Mat<C64>, x: &[C64]) -> Vec<C64> {
    let mut y = vec![C64::new(0.0, 0.0); m.nrows()];
    for j in 0..m.ncols() {
        let xj = x[j];
        if xj == C64::new(0.0, 0.0) {
            continue;
        }
        for (i, yi) in y.iter_mut().enumerate() {
            *yi += m[(i, j)] * xj;
        }
    }
    y
}

/// Column `j` of a matrix as a vector.
pub fn column(m: &Mat<C64>, j: usize) -> Vec<C64> {
    (0..m.nrows()).map(|i| m[(i, j)]).collect()
}
