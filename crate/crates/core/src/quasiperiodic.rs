//! The alpha-quasi-periodic cell problem: Rayleigh DtN maps on `x2 = +-H`,
//! the boundary system `A(alpha)`, its right-hand sides and solutions.

use std::f64::consts::PI;

use faer::Mat;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::geometry::{build_mesh, BoundaryMesh, CellRect, CurveShape, Point2};
use crate::layer::{column, matvec, representation, source_traces, Boundary, LayerOps, Source};
use crate::linalg::Lu;

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// `beta_l = sqrt(k^2 - (alpha + l)^2)` with `arg beta_l in [0, pi)`.
pub fn beta(k: f64, alpha: f64, l: i64) -> C64 {
    let a = alpha + l as f64;
    let v = k * k - a * a;
    if v >= 0.0 {
        C64::new(v.sqrt(), 0.0)
    } else {
        C64::new(0.0, (-v).sqrt())
    }
}

/// `e^{2 pi i alpha}`.
pub fn phase(alpha: f64) -> C64 {
    C64::from_polar(1.0, 2.0 * PI * alpha)
}

/// Discrete DtN matrix on a horizontal segment with abscissae `x1`,
/// scaled speeds `sigma` and grid spacing `h`, acting on traces and
/// returning scaled outward normal derivatives.
pub fn dtn_matrix(k: f64, alpha: f64, j_trunc: usize, x1: &[f64], sigma: &[f64], h: f64) -> Mat<C64> {
    let n0 = x1.len();
    let jt = j_trunc as i64;
    let nl = 2 * j_trunc + 1;
    let e = Mat::<C64>::from_fn(n0, nl, |j, l| C64::from_polar(1.0, (alpha + (l as i64 - jt) as f64) * x1[j]));
    let betas: Vec<C64> = (0..nl).map(|l| beta(k, alpha, l as i64 - jt)).collect();
    let eb = Mat::<C64>::from_fn(n0, nl, |j, l| e[(j, l)] * betas[l]);
    let mut b = &eb * e.adjoint();
    let c = I * (h / (2.0 * PI));
    for m in 0..n0 {
        for j in 0..n0 {
            b[(j, m)] *= c * (sigma[j] * sigma[m]);
        }
    }
    b
}

/// Truncated Rayleigh expansions above `x2 = H` and below `x2 = -H`.
#[derive(Clone, Debug)]
pub struct RayleighExpansion {
    pub k: f64,
    pub alpha: f64,
    pub height: f64,
    pub j_trunc: usize,
    /// Coefficients indexed by `l + j_trunc`.
    pub top: Vec<C64>,
    pub bottom: Vec<C64>,
}

impl RayleighExpansion {
    /// Value, and gradient if requested, at `|x2| >= H`.
    pub fn eval(&self, x: Point2) -> Result<(C64, [C64; 2])> {
        let (coef, sign, dist) = if x.y >= self.height {
            (&self.top, 1.0, x.y - self.height)
        } else if x.y <= -self.height {
            (&self.bottom, -1.0, -x.y - self.height)
        } else {
            return Err(Error::Domain(format!("Rayleigh expansion evaluated inside the strip at x2 = {}", x.y)));
        };
        let jt = self.j_trunc as i64;
        let mut v = C64::new(0.0, 0.0);
        let mut g = [C64::new(0.0, 0.0); 2];
        for (idx, c) in coef.iter().enumerate() {
            let l = idx as i64 - jt;
            let al = self.alpha + l as f64;
            let b = beta(self.k, self.alpha, l);
            let t = c * (I * (al * x.x + b * dist)).exp();
            v += t;
            g[0] += I * al * t;
            g[1] += I * b * sign * t;
        }
        Ok((v, g))
    }
}

/// Rayleigh coefficients `(1/2pi) sum_j h sigma_j u_j e^{-i alpha_l x1_j}`,
/// one column per input column.
pub fn rayleigh_matrix(alpha: f64, j_trunc: usize, x1: &[f64], sigma: &[f64], h: f64, u: &Mat<C64>) -> Mat<C64> {
    let jt = j_trunc as i64;
    let nl = 2 * j_trunc + 1;
    let c = h / (2.0 * PI);
    let e = Mat::<C64>::from_fn(nl, x1.len(), |l, j| {
        C64::from_polar(c * sigma[j], -(alpha + (l as i64 - jt) as f64) * x1[j])
    });
    &e * u
}

/// Geometry and alpha-independent operators of the periodic cell.
pub struct CellProblem {
    pub k: f64,
    pub height: f64,
    pub j_trunc: usize,
    pub rect: CellRect,
    /// Obstacle mesh with normals pointing into the obstacle.
    pub obstacle: BoundaryMesh,
    /// Rectangle nodes followed by obstacle nodes.
    pub boundary: Boundary,
    /// Interior Neumann-to-Dirichlet map of the fluid cell.
    pub ntd: Mat<C64>,
    outline: Vec<Point2>,
    top_x1: Vec<f64>,
    top_sigma: Vec<f64>,
    bot_x1: Vec<f64>,
    bot_sigma: Vec<f64>,
}

/// What generated a cell solution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Excitation {
    Source(Source),
    /// `e^{ik(cos(theta) x1 - sin(theta) x2)}`.
    Plane { theta: f64 },
}

impl Excitation {
    pub fn value(&self, k: f64, x: Point2) -> C64 {
        match self {
            Excitation::Source(s) => s.value(k, x),
            Excitation::Plane { theta } => plane_wave(k, *theta, x),
        }
    }

    /// `a . grad` at `x`.
    pub fn deriv(&self, k: f64, x: Point2, a: Point2) -> C64 {
        match self {
            Excitation::Source(s) => s.deriv(k, x, a),
            Excitation::Plane { theta } => {
                let (s, c) = theta.sin_cos();
                I * k * (c * a.x - s * a.y) * plane_wave(k, *theta, x)
            }
        }
    }
}

pub fn plane_wave(k: f64, theta: f64, x: Point2) -> C64 {
    let (s, c) = theta.sin_cos();
    C64::from_polar(1.0, k * (c * x.x - s * x.y))
}

/// Quasimomentum of a plane wave, reduced to `(-1/2, 1/2]`.
pub fn plane_alpha(k: f64, theta: f64) -> f64 {
    let a = k * theta.cos();
    a - (a - 0.5).ceil()
}

/// A solved cell problem: scattered trace `psi` and scaled normal
/// derivative `phi` on the cell boundary nodes.
#[derive(Clone, Debug)]
pub struct QpSolution {
    pub alpha: f64,
    pub excitation: Excitation,
    pub psi: Vec<C64>,
    pub phi: Vec<C64>,
}

/// `A(alpha)` factorized together with its DtN blocks.
pub struct CellFactor {
    pub alpha: f64,
    pub lu: Lu,
    b_top: Mat<C64>,
    b_bot: Mat<C64>,
}

fn rows(m: &Mat<C64>, idx: &[usize]) -> Mat<C64> {
    Mat::<C64>::from_fn(idx.len(), m.ncols(), |i, j| m[(idx[i], j)])
}

impl CellProblem {
    /// Builds the cell with `m` obstacle nodes and `n` rectangle nodes.
    pub fn new(
        k: f64,
        height: f64,
        obstacle: &CurveShape,
        m: usize,
        n: usize,
        p: u32,
        j_trunc: usize,
    ) -> Result<CellProblem> {
        if !(k > 0.0) || !k.is_finite() {
            return Err(Error::Parameter(format!("wavenumber must be positive, got {k}")));
        }
        if (j_trunc as f64) < k + 2.0 {
            tracing::warn!(j_trunc, k, "Rayleigh truncation barely covers the propagating orders");
        }
        for x in obstacle.sample(1024)? {
            if !(x.x.abs() < PI && x.y.abs() < height) {
                return Err(Error::Parameter(format!(
                    "obstacle point ({:.3}, {:.3}) is outside the cell (-pi, pi) x (-H, H)",
                    x.x, x.y
                )));
            }
        }
        let outline = obstacle.sample(4096)?;
        let rect = CellRect::new(height, n, p)?;
        let obstacle = build_mesh(obstacle, m, p)?.flipped();
        let boundary = Boundary::new(&[&rect.mesh, &obstacle]);
        let ops = LayerOps::assemble(k, &boundary)?;
        let ntd = ops.ntd()?;
        let pick = |idx: &[usize]| -> (Vec<f64>, Vec<f64>) {
            (idx.iter().map(|&i| rect.mesh.points[i].x).collect(), idx.iter().map(|&i| rect.mesh.sigma[i]).collect())
        };
        let (top_x1, top_sigma) = pick(&rect.top);
        let (bot_x1, bot_sigma) = pick(&rect.bottom);
        Ok(CellProblem { k, height, j_trunc, rect, obstacle, boundary, ntd, outline, top_x1, top_sigma, bot_x1, bot_sigma })
    }

    pub fn len(&self) -> usize {
        self.boundary.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boundary.is_empty()
    }

    /// Index of the first obstacle node.
    pub fn obstacle_start(&self) -> usize {
        self.rect.mesh.len()
    }

    pub fn h_rect(&self) -> f64 {
        self.rect.mesh.h
    }

    pub fn dtn_top(&self, alpha: f64) -> Mat<C64> {
        dtn_matrix(self.k, alpha, self.j_trunc, &self.top_x1, &self.top_sigma, self.h_rect())
    }

    pub fn dtn_bottom(&self, alpha: f64) -> Mat<C64> {
        dtn_matrix(self.k, alpha, self.j_trunc, &self.bot_x1, &self.bot_sigma, self.h_rect())
    }

    /// Applies the boundary rows to traces `psi` and scaled derivatives `phi`
    /// (one column per field):
    /// wall traces `psi_R - e psi_L`, wall derivatives `phi_R + e phi_L`,
    /// bottom and top `B psi - phi`, obstacle `psi` (`phi` at corners).
    pub fn apply_rows(&self, alpha: f64, b_top: &Mat<C64>, b_bot: &Mat<C64>, psi: &Mat<C64>, phi: &Mat<C64>) -> Mat<C64> {
        let n = self.len();
        let c = psi.ncols();
        let e = phase(alpha);
        let mut r = Mat::<C64>::zeros(n, c);
        for (&l, &rr) in self.rect.left.iter().zip(&self.rect.right) {
            for j in 0..c {
                r[(l, j)] = psi[(rr, j)] - e * psi[(l, j)];
                r[(rr, j)] = phi[(rr, j)] + e * phi[(l, j)];
            }
        }
        for (idx, b) in [(&self.rect.bottom, b_bot), (&self.rect.top, b_top)] {
            let bp = b * rows(psi, idx);
            for (i, &row) in idx.iter().enumerate() {
                for j in 0..c {
                    r[(row, j)] = bp[(i, j)] - phi[(row, j)];
                }
            }
        }
        let s = self.obstacle_start();
        for row in s..n {
            let src = if self.boundary.corner[row] { phi } else { psi };
            for j in 0..c {
                r[(row, j)] = src[(row, j)];
            }
        }
        r
    }

    /// `A(alpha) = P N - Q` in scaled-derivative unknowns.
    pub fn system_matrix(&self, alpha: f64) -> Mat<C64> {
        let n = self.len();
        let id = Mat::<C64>::identity(n, n);
        self.apply_rows(alpha, &self.dtn_top(alpha), &self.dtn_bottom(alpha), &self.ntd, &id)
    }

    pub fn factor(&self, alpha: f64) -> Result<CellFactor> {
        let b_top = self.dtn_top(alpha);
        let b_bot = self.dtn_bottom(alpha);
        let n = self.len();
        let a = self.apply_rows(alpha, &b_top, &b_bot, &self.ntd, &Mat::<C64>::identity(n, n));
        let lu = Lu::new(a.as_ref(), &format!("quasi-periodic cell system at alpha = {alpha}"))?;
        Ok(CellFactor { alpha, lu, b_top, b_bot })
    }

    /// Right-hand sides for incident fields with traces `t` and scaled
    /// normal derivatives `dn` on the boundary nodes.
    pub fn rhs(&self, f: &CellFactor, t: &Mat<C64>, dn: &Mat<C64>) -> Mat<C64> {
        let mut r = self.apply_rows(f.alpha, &f.b_top, &f.b_bot, t, dn);
        for j in 0..r.ncols() {
            for i in 0..r.nrows() {
                r[(i, j)] = -r[(i, j)];
            }
        }
        r
    }

    /// Right-hand side for a single point source.
    pub fn rhs_point_source(&self, f: &CellFactor, source: Source) -> Result<Vec<C64>> {
        let (t, dn) = self.source_traces(&[source])?;
        Ok(column(&self.rhs(f, &t, &dn), 0))
    }

    /// Traces and scaled normal derivatives of sources on the boundary.
    pub fn source_traces(&self, sources: &[Source]) -> Result<(Mat<C64>, Mat<C64>)> {
        for (c, s) in sources.iter().enumerate() {
            let y = s.point();
            if !(y.x.abs() < PI && y.y.abs() < self.height) {
                return Err(Error::Parameter(format!("source {c} at ({}, {}) is outside the cell", y.x, y.y)));
            }
        }
        source_traces(self.k, &self.boundary, sources)
    }

    /// Solves for all right-hand sides; returns `(phi_sc, psi_sc)`.
    pub fn solve(&self, f: &CellFactor, rhs: &Mat<C64>) -> (Mat<C64>, Mat<C64>) {
        let phi = f.lu.solve(rhs.as_ref());
        let psi = &self.ntd * &phi;
        (phi, psi)
    }

    /// Quasi-periodic Green's function scattered part for one source.
    pub fn solve_point_source(&self, alpha: f64, source: Source) -> Result<QpSolution> {
        let f = self.factor(alpha)?;
        self.solve_source_with(&f, source)
    }

    pub fn solve_source_with(&self, f: &CellFactor, source: Source) -> Result<QpSolution> {
        let (t, dn) = self.source_traces(&[source])?;
        let (phi, psi) = self.solve(f, &self.rhs(f, &t, &dn));
        Ok(QpSolution { alpha: f.alpha, excitation: Excitation::Source(source), psi: column(&psi, 0), phi: column(&phi, 0) })
    }

    /// Scattered field of the unperturbed array under plane-wave incidence.
    pub fn solve_reference_plane(&self, theta: f64) -> Result<QpSolution> {
        if !(theta > 0.0 && theta < PI) {
            return Err(Error::Parameter(format!("incident angle must lie in (0, pi), got {theta}")));
        }
        let alpha = plane_alpha(self.k, theta);
        let f = self.factor(alpha)?;
        let n = self.len();
        let mut rhs = Mat::<C64>::zeros(n, 1);
        for row in self.obstacle_start()..n {
            if !self.boundary.corner[row] {
                rhs[(row, 0)] = -plane_wave(self.k, theta, self.boundary.points[row]);
            }
        }
        let (phi, psi) = self.solve(&f, &rhs);
        Ok(QpSolution { alpha, excitation: Excitation::Plane { theta }, psi: column(&psi, 0), phi: column(&phi, 0) })
    }

    /// Rayleigh coefficients of a field given by its traces on all nodes.
    pub fn rayleigh_coeffs(&self, alpha: f64, trace: &[C64]) -> RayleighExpansion {
        let col = |idx: &[usize]| Mat::<C64>::from_fn(idx.len(), 1, |i, _| trace[idx[i]]);
        let h = self.h_rect();
        let top = rayleigh_matrix(alpha, self.j_trunc, &self.top_x1, &self.top_sigma, h, &col(&self.rect.top));
        let bot = rayleigh_matrix(alpha, self.j_trunc, &self.bot_x1, &self.bot_sigma, h, &col(&self.rect.bottom));
        RayleighExpansion {
            k: self.k,
            alpha,
            height: self.height,
            j_trunc: self.j_trunc,
            top: column(&top, 0),
            bottom: column(&bot, 0),
        }
    }

    /// Rayleigh coefficient matrices (top, bottom) for many fields.
    pub fn rayleigh_matrices(&self, alpha: f64, traces: &Mat<C64>) -> (Mat<C64>, Mat<C64>) {
        let h = self.h_rect();
        (
            rayleigh_matrix(alpha, self.j_trunc, &self.top_x1, &self.top_sigma, h, &rows(traces, &self.rect.top)),
            rayleigh_matrix(alpha, self.j_trunc, &self.bot_x1, &self.bot_sigma, h, &rows(traces, &self.rect.bottom)),
        )
    }

    /// True if `x` lies inside the obstacle of cell 0.
    pub fn in_obstacle(&self, x: Point2) -> bool {
        crate::geometry::polygon_contains(&self.outline, x)
    }
}

impl QpSolution {
    /// Incident trace on the boundary nodes.
    pub fn incident_trace(&self, cell: &CellProblem) -> Vec<C64> {
        cell.boundary.points.iter().map(|&x| self.excitation.value(cell.k, x)).collect()
    }

    /// Total trace (scattered plus incident) on the boundary nodes.
    pub fn total_trace(&self, cell: &CellProblem) -> Vec<C64> {
        self.incident_trace(cell).iter().zip(&self.psi).map(|(a, b)| a + b).collect()
    }

    /// Total scaled normal derivative on the boundary nodes.
    pub fn total_dn(&self, cell: &CellProblem) -> Vec<C64> {
        let b = &cell.boundary;
        (0..b.len())
            .map(|l| self.phi[l] + self.excitation.deriv(cell.k, b.points[l], b.normals[l]) * b.sigma[l])
            .collect()
    }

    /// Total field and its derivatives along `dirs` inside the fluid cell.
    pub fn eval_total(&self, cell: &CellProblem, targets: &[Point2], dirs: Option<&[Point2]>) -> Result<Vec<C64>> {
        let (a, b) = representation(cell.k, &cell.boundary, targets, dirs)?;
        let sa = matvec(&a, &self.phi);
        let sb = matvec(&b, &self.psi);
        Ok(targets
            .iter()
            .enumerate()
            .map(|(t, &x)| {
                let inc = match dirs {
                    None => self.excitation.value(cell.k, x),
                    Some(d) => self.excitation.deriv(cell.k, x, d[t]),
                };
                inc + sa[t] + sb[t]
            })
            .collect())
    }

    /// Rayleigh expansion of the scattered field.
    pub fn rayleigh(&self, cell: &CellProblem) -> RayleighExpansion {
        cell.rayleigh_coeffs(self.alpha, &self.psi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn beta_branches() {
        assert!((beta(1.25, 0.25, 0) - C64::new(1.5f64.sqrt(), 0.0)).norm() < 1e-15);
        assert_eq!(beta(1.25, 0.25, 1), C64::new(0.0, 0.0));
        assert!((beta(1.0, 0.0, 2) - C64::new(0.0, 3f64.sqrt())).norm() < 1e-15);
    }

    #[test]
    fn plane_quasimomentum() {
        let a = plane_alpha(1.25, PI / 6.0);
        assert!((a - (1.25 * (PI / 6.0).cos() - 1.0)).abs() < 1e-15);
        assert_eq!(plane_alpha(3.0, 0.0), 0.0);
        assert_eq!(plane_alpha(1.5, 0.0), 0.5);
    }

    #[test]
    fn dtn_zero_input() {
        let x1: Vec<f64> = (0..10).map(|j| -PI + 0.6 * j as f64).collect();
        let s = vec![1.0; 10];
        let b = dtn_matrix(1.25, 0.1, 10, &x1, &s, 0.6);
        let z = Mat::<C64>::zeros(10, 1);
        assert_eq!((&b * &z).norm_max(), 0.0);
    }
}
