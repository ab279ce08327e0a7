//! Transparent boundary condition on the artificial curve and the coupled
//! solve for the locally perturbed array.

use faer::Mat;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::floquet::{background_green_threaded, FbQuadrature, GreenData};
use crate::geometry::{build_mesh, polygon_contains, BoundaryMesh, CurveShape, Point2};
use crate::layer::{column, matvec, representation, source_traces, Boundary, LayerOps, Source};
use crate::linalg::Lu;
use crate::quasiperiodic::{plane_alpha, CellProblem, QpSolution};

/// Incident field of the perturbed problem.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Incidence {
    /// Point source at `x*`.
    Cylindrical { source: Point2 },
    /// Plane wave `e^{ik(cos(theta) x1 - sin(theta) x2)}`.
    Plane { theta: f64 },
}

/// Discrete TBC operators on the artificial curve.
pub struct TbcMatrices {
    pub s: Mat<C64>,
    pub k: Mat<C64>,
    /// `(K - I)^{-1} S`.
    pub ntd: Mat<C64>,
}

/// Assembles `S`, `K` and the TBC map from the free-space operators on the
/// curve and samples of the smooth part of the background Green's function:
/// `g_mono[(i, k)] = G^sc(x_i; y_k)`, `g_dip[(i, k)] = nu_k . grad_y G^sc(x_i; y_k)`.
pub fn assemble_tbc(k: f64, curve: &Boundary, g_mono: &Mat<C64>, g_dip: &Mat<C64>) -> Result<TbcMatrices> {
    let n = curve.len();
    if g_mono.nrows() != n || g_mono.ncols() != n || g_dip.nrows() != n || g_dip.ncols() != n {
        return Err(Error::Parameter("Green's function samples do not match the curve".into()));
    }
    let ops = LayerOps::assemble(k, curve)?;
    let mut s = ops.s;
    let mut kk = ops.k;
    for j in 0..n {
        let h2 = 2.0 * curve.h[j];
        let hs = h2 * curve.sigma[j];
        for i in 0..n {
            s[(i, j)] += h2 * g_mono[(i, j)];
            kk[(i, j)] += hs * g_dip[(i, j)];
        }
    }
    let mut a = kk.clone();
    for i in 0..n {
        a[(i, i)] -= 1.0;
    }
    let lu = Lu::new(a.as_ref(), "transparent boundary condition (K - I)")?;
    let ntd = lu.solve(s.as_ref());
    Ok(TbcMatrices { s, k: kk, ntd })
}

/// Free-space NtD map of the region between the artificial curve and the
/// perturbed obstacle, with normals pointing out of that region.
pub fn interior_ntd(k: f64, omega_b: &Boundary) -> Result<Mat<C64>> {
    LayerOps::assemble(k, omega_b)?.ntd()
}

/// Settings of the perturbed problem that are independent of the cell.
#[derive(Clone, Debug)]
pub struct TbcConfig {
    pub artificial: CurveShape,
    pub n_artificial: usize,
    pub perturbed: CurveShape,
    pub m_perturbed: usize,
    pub grading: u32,
    pub incidence: Incidence,
    /// Quasi-periodic solves run concurrently.
    pub threads: usize,
}

/// Everything needed to solve and evaluate the perturbed problem.
pub struct PerturbedProblem {
    pub k: f64,
    pub incidence: Incidence,
    pub cell: CellProblem,
    /// Artificial curve, normals pointing away from the enclosed region.
    pub gamma: BoundaryMesh,
    pub gamma_b: Boundary,
    /// Perturbed obstacle with its own outward normals.
    pub perturbed: BoundaryMesh,
    /// Artificial curve followed by the flipped perturbed obstacle.
    pub omega_b: Boundary,
    pub green: GreenData,
    pub tbc: TbcMatrices,
    pub nhat: Mat<C64>,
    /// Reference solution of the unperturbed array for plane incidence.
    pub reference: Option<QpSolution>,
    /// Column of `green` holding `G(.; x*)` for a source outside the curve.
    pub source_column: Option<usize>,
    gamma_outline: Vec<Point2>,
    perturbed_outline: Vec<Point2>,
    /// Setup timings in seconds.
    pub timings: SetupTimings,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct SetupTimings {
    pub green: f64,
    pub green_samples: f64,
    pub tbc: f64,
    pub interior: f64,
}

/// A solved perturbed problem. All derivatives are scaled and taken along
/// the normals of `omega_b`.
#[derive(Clone, Debug)]
pub struct PerturbedSolution {
    pub incidence: Incidence,
    /// Total traces on the artificial curve and the perturbed obstacle.
    pub u1: Vec<C64>,
    pub u2: Vec<C64>,
    pub phi1: Vec<C64>,
    pub phi2: Vec<C64>,
    /// Outgoing part on the artificial curve, total minus reference.
    pub w: Vec<C64>,
    pub dw: Vec<C64>,
    /// Reference trace and scaled derivative on the artificial curve.
    pub r1: Vec<C64>,
    pub dr1: Vec<C64>,
}

fn sub(a: &[C64], b: &[C64]) -> Vec<C64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

impl PerturbedProblem {
    /// Sets up the TBC for a given cell, quadrature and geometry. `cells`
    /// lists the translated cells whose Green's data are kept for leaping;
    /// `keep_rayleigh` keeps what is needed beyond `|x2| = H`.
    pub fn new(cell: CellProblem, cfg: &TbcConfig, quadrature: &FbQuadrature, cells: &[i64], keep_rayleigh: bool) -> Result<PerturbedProblem> {
        let k = cell.k;
        let h = cell.height;
        let gamma = build_mesh(&cfg.artificial, cfg.n_artificial, cfg.grading)?;
        if gamma.corner.iter().any(|&c| c) {
            return Err(Error::Parameter("the artificial curve must be smooth".into()));
        }
        let gamma_outline = cfg.artificial.sample(4096)?;
        for p in &gamma_outline {
            if !(p.x.abs() < std::f64::consts::PI && p.y.abs() < h) {
                return Err(Error::Parameter("the artificial curve must lie inside the cell".into()));
            }
        }
        let perturbed_outline = cfg.perturbed.sample(4096)?;
        for p in perturbed_outline.iter().chain(cell.obstacle.points.iter()) {
            if !polygon_contains(&gamma_outline, *p) {
                return Err(Error::Parameter(
                    "the artificial curve must enclose both the perturbed and the original obstacle".into(),
                ));
            }
        }
        let perturbed = build_mesh(&cfg.perturbed, cfg.m_perturbed, cfg.grading)?;
        let gamma_b = Boundary::new(&[&gamma]);
        let omega_b = Boundary::new(&[&gamma, &perturbed.flipped()]);

        let mut sources: Vec<Source> = gamma.points.iter().map(|&y| Source::Monopole(y)).collect();
        sources.extend(gamma.points.iter().zip(&gamma.normals).map(|(&y, &d)| Source::Dipole(y, d)));
        let mut source_column = None;
        let mut reference = None;
        match cfg.incidence {
            Incidence::Cylindrical { source } => {
                if !(source.x.abs() < std::f64::consts::PI && source.y.abs() < h) {
                    return Err(Error::Parameter("the point source must lie inside the cell strip".into()));
                }
                if gamma.distance_to(source) < 1e-8 || perturbed.distance_to(source) < 1e-8 {
                    return Err(Error::Parameter("the point source lies on a boundary".into()));
                }
                if polygon_contains(&perturbed_outline, source) {
                    return Err(Error::Parameter("the point source lies inside the perturbed obstacle".into()));
                }
                if !polygon_contains(&gamma_outline, source) {
                    if cell.in_obstacle(source) {
                        return Err(Error::Parameter("the point source lies inside an obstacle".into()));
                    }
                    source_column = Some(sources.len());
                    sources.push(Source::Monopole(source));
                }
            }
            Incidence::Plane { theta } => {
                reference = Some(cell.solve_reference_plane(theta)?);
            }
        }

        let t0 = std::time::Instant::now();
        let green = background_green_threaded(&cell, quadrature, &sources, cells, keep_rayleigh, cfg.threads)?;
        let t1 = std::time::Instant::now();
        let np = gamma.len();
        let gsc = green.eval_cell0_scattered(&cell.boundary, &gamma.points, None)?;
        let g_mono = Mat::<C64>::from_fn(np, np, |i, j| gsc[(i, j)]);
        let g_dip = Mat::<C64>::from_fn(np, np, |i, j| gsc[(i, np + j)]);
        let t2 = std::time::Instant::now();
        let tbc = assemble_tbc(k, &gamma_b, &g_mono, &g_dip)?;
        let t3 = std::time::Instant::now();
        let nhat = interior_ntd(k, &omega_b)?;
        let t4 = std::time::Instant::now();
        let timings = SetupTimings {
            green: (t1 - t0).as_secs_f64(),
            green_samples: (t2 - t1).as_secs_f64(),
            tbc: (t3 - t2).as_secs_f64(),
            interior: (t4 - t3).as_secs_f64(),
        };
        Ok(PerturbedProblem {
            k,
            incidence: cfg.incidence,
            cell,
            gamma,
            gamma_b,
            perturbed,
            omega_b,
            green,
            tbc,
            nhat,
            reference,
            source_column,
            gamma_outline,
            perturbed_outline,
            timings,
        })
    }

    pub fn n_artificial(&self) -> usize {
        self.gamma.len()
    }

    /// True if `x` is enclosed by the artificial curve.
    pub fn in_omega_b_closure(&self, x: Point2) -> bool {
        polygon_contains(&self.gamma_outline, x)
    }

    pub fn in_perturbed(&self, x: Point2) -> bool {
        polygon_contains(&self.perturbed_outline, x)
    }

    /// Source of the incident field if it lies inside the artificial curve.
    pub fn interior_source(&self) -> Option<Point2> {
        match self.incidence {
            Incidence::Cylindrical { source } if self.source_column.is_none() => Some(source),
            _ => None,
        }
    }

    /// Reference field (trace, scaled derivative) on the artificial curve.
    fn reference_on_gamma(&self) -> Result<(Vec<C64>, Vec<C64>)> {
        let np = self.gamma.len();
        let dirs: Vec<Point2> = self.gamma.normals.clone();
        if let Some(r) = &self.reference {
            let u = r.eval_total(&self.cell, &self.gamma.points, None)?;
            let du = r.eval_total(&self.cell, &self.gamma.points, Some(&dirs))?;
            let dr = du.iter().zip(&self.gamma.sigma).map(|(d, s)| d * *s).collect();
            return Ok((u, dr));
        }
        if let Some(c) = self.source_column {
            let u = self.green.eval_cell0(&self.cell.boundary, &self.gamma.points, None)?;
            let du = self.green.eval_cell0(&self.cell.boundary, &self.gamma.points, Some(&dirs))?;
            return Ok(((0..np).map(|i| u[(i, c)]).collect(), (0..np).map(|i| du[(i, c)] * self.gamma.sigma[i]).collect()));
        }
        Ok((vec![C64::new(0.0, 0.0); np], vec![C64::new(0.0, 0.0); np]))
    }

    /// Solves the coupled system on the artificial curve and the perturbed
    /// obstacle.
    pub fn solve(&self) -> Result<PerturbedSolution> {
        let np = self.gamma.len();
        let m2 = self.perturbed.len();
        let n = np + m2;
        let (r1, dr1) = self.reference_on_gamma()?;
        let (ti, dni) = match self.interior_source() {
            Some(x) => {
                let (t, d) = source_traces(self.k, &self.omega_b, &[Source::Monopole(x)])?;
                (column(&t, 0), column(&d, 0))
            }
            None => (vec![C64::new(0.0, 0.0); n], vec![C64::new(0.0, 0.0); n]),
        };
        let nh = &self.nhat;
        let nt = &self.tbc.ntd;
        let mut a = Mat::<C64>::zeros(n, n);
        let mut b = vec![C64::new(0.0, 0.0); n];
        let nh_dni = matvec(nh, &dni);
        let nt_dr = matvec(nt, &dr1);
        for i in 0..np {
            for j in 0..n {
                a[(i, j)] = nh[(i, j)];
            }
            for j in 0..np {
                a[(i, j)] -= nt[(i, j)];
            }
            b[i] = r1[i] - nt_dr[i] - ti[i] + nh_dni[i];
        }
        for i in np..n {
            if self.omega_b.corner[i] {
                a[(i, i)] = C64::new(1.0, 0.0);
                continue;
            }
            for j in 0..n {
                a[(i, j)] = nh[(i, j)];
            }
            b[i] = -ti[i] + nh_dni[i];
        }
        let lu = Lu::new(a.as_ref(), "coupled TBC system")?;
        let phi = lu.solve_vec(&b);
        let phi1 = phi[..np].to_vec();
        let phi2 = phi[np..].to_vec();
        let dsc = sub(&phi, &dni);
        let usc = matvec(nh, &dsc);
        let u: Vec<C64> = usc.iter().zip(&ti).map(|(a, b)| a + b).collect();
        let u1 = u[..np].to_vec();
        let u2 = u[np..].to_vec();
        let w = sub(&u1, &r1);
        let dw = sub(&phi1, &dr1);
        Ok(PerturbedSolution { incidence: self.incidence, u1, u2, phi1, phi2, w, dw, r1, dr1 })
    }

    /// Quasimomentum of the reference field for plane incidence.
    pub fn reference_alpha(&self) -> Option<f64> {
        match self.incidence {
            Incidence::Plane { theta } => Some(plane_alpha(self.k, theta)),
            _ => None,
        }
    }

    /// Total field at targets inside the region between the artificial
    /// curve and the perturbed obstacle.
    pub fn eval_in_omega_b(&self, sol: &PerturbedSolution, targets: &[Point2]) -> Result<Vec<C64>> {
        for (t, &x) in targets.iter().enumerate() {
            let d = self.omega_b.distance_to(x);
            if d < 0.5 * self.gamma.max_spacing().min(self.perturbed.max_spacing()) {
                tracing::warn!(target = t, distance = d, "evaluation point close to the boundary of the inner region");
            }
        }
        let src = self.interior_source();
        let mut u: Vec<C64> = sol.u1.iter().chain(&sol.u2).copied().collect();
        let mut phi: Vec<C64> = sol.phi1.iter().chain(&sol.phi2).copied().collect();
        if let Some(x) = src {
            let (t, d) = source_traces(self.k, &self.omega_b, &[Source::Monopole(x)])?;
            for i in 0..u.len() {
                u[i] -= t[(i, 0)];
                phi[i] -= d[(i, 0)];
            }
        }
        let (a, b) = representation(self.k, &self.omega_b, targets, None)?;
        let va = matvec(&a, &phi);
        let vb = matvec(&b, &u);
        Ok(targets
            .iter()
            .enumerate()
            .map(|(t, &x)| {
                let inc = match src {
                    Some(s) => Source::Monopole(s).value(self.k, x),
                    None => C64::new(0.0, 0.0),
                };
                inc + va[t] + vb[t]
            })
            .collect())
    }

    /// Coefficients `v` with `sum_c v_c G(x; source_c)` equal to the total
    /// field outside the artificial curve, less the plane-wave reference.
    pub fn green_weights(&self, sol: &PerturbedSolution) -> Vec<C64> {
        let np = self.gamma.len();
        let mut v = vec![C64::new(0.0, 0.0); self.green.sources.len()];
        for k in 0..np {
            let h = self.gamma.h;
            v[k] = -h * sol.dw[k];
            v[np + k] = h * self.gamma.sigma[k] * sol.w[k];
        }
        if let Some(c) = self.source_column {
            v[c] = C64::new(1.0, 0.0);
        }
        v
    }

    /// Residual of the TBC relation `(K - I) w = S dw` for given data.
    pub fn tbc_residual(&self, w: &[C64], dw: &[C64]) -> Vec<C64> {
        let kw = matvec(&self.tbc.k, w);
        let sd = matvec(&self.tbc.s, dw);
        (0..w.len()).map(|i| kw[i] - w[i] - sd[i]).collect()
    }
}
