//! Inverse Floquet-Bloch quadrature and assembly of the periodic background
//! Green's function from quasi-periodic cell solves.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::time::Instant;

use faer::Mat;
use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::Point2;
use crate::kernels::gauss_legendre;
use crate::layer::{representation, Boundary, Source};
use crate::quasiperiodic::{beta, phase, CellProblem, RayleighExpansion};

/// `kappa in (-1/2, 1/2]` with `k - kappa` a non-negative integer.
pub fn kappa_of(k: f64) -> Result<f64> {
    if !(k > 0.0) || !k.is_finite() {
        return Err(Error::Parameter(format!("wavenumber must be positive, got {k}")));
    }
    Ok(k - (k - 0.5).ceil())
}

/// Which substitution the quadrature used.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FbBranch {
    /// Two sub-intervals split at the Rayleigh anomalies.
    Split,
    /// `kappa = 1/2`: one interval `(-1/2, 1/2)`.
    HalfInteger,
    /// `kappa = 0`: one interval `(0, 1)`.
    Integer,
}

/// Nodes and weights for `integral over one period of f(alpha) d alpha`.
#[derive(Clone, Debug, Serialize)]
pub struct FbQuadrature {
    pub k: f64,
    pub kappa: f64,
    pub n: usize,
    pub branch: FbBranch,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Gauss-Legendre rule on `theta in (0, pi)`.
fn theta_rule(m: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let (x, w) = gauss_legendre(m)?;
    Ok((x.iter().map(|x| 0.5 * PI * (x + 1.0)).collect(), w.iter().map(|w| 0.5 * PI * w).collect()))
}

/// Cosine-substitution quadrature with `n` nodes (even).
pub fn ifb_quadrature(k: f64, n: usize) -> Result<FbQuadrature> {
    if n < 2 || !n.is_multiple_of(2) {
        return Err(Error::Parameter(format!("Floquet-Bloch node count must be even and >= 2, got {n}")));
    }
    let kappa = kappa_of(k)?;
    let a = kappa.abs();
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    let branch = if a == 0.0 {
        FbBranch::Integer
    } else if a == 0.5 {
        FbBranch::HalfInteger
    } else {
        FbBranch::Split
    };
    match branch {
        FbBranch::Integer | FbBranch::HalfInteger => {
            let (th, w) = theta_rule(n)?;
            let shift = if branch == FbBranch::Integer { 0.5 } else { 0.0 };
            for (t, w) in th.iter().zip(&w) {
                nodes.push(shift - 0.5 * t.cos());
                weights.push(0.5 * t.sin() * w);
            }
        }
        FbBranch::Split => {
            let (th, w) = theta_rule(n / 2)?;
            for (t, w) in th.iter().zip(&w) {
                nodes.push(a * t.cos());
                weights.push(a * t.sin() * w);
            }
            for (t, w) in th.iter().zip(&w) {
                nodes.push(0.5 * ((2.0 * a - 1.0) * t.cos() + 1.0));
                weights.push(0.5 * (1.0 - 2.0 * a) * t.sin() * w);
            }
        }
    }
    Ok(FbQuadrature { k, kappa, n, branch, nodes, weights })
}

impl FbQuadrature {
    /// Smallest distance from a node to a Rayleigh anomaly.
    pub fn anomaly_gap(&self) -> f64 {
        let a = self.kappa.abs();
        self.nodes
            .iter()
            .map(|&x| [(x + a).abs(), (x - a).abs(), (x - (1.0 - a)).abs()].into_iter().fold(f64::INFINITY, f64::min))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Timings of one background Green's function assembly, in seconds.
#[derive(Clone, Debug, Default, Serialize)]
pub struct GreenTimings {
    pub factor: f64,
    pub solve: f64,
    pub accumulate: f64,
}

/// Per-node Rayleigh coefficient matrices, one column per source column.
#[derive(Clone, Debug)]
pub struct RayleighSamples {
    pub alpha: f64,
    pub weight: f64,
    pub top: Mat<C64>,
    pub bottom: Mat<C64>,
}

/// Background Green's function data for a set of sources: the
/// alpha-integrated scattered boundary densities of cell 0, the total
/// boundary data of requested translated cells, and optionally the
/// per-node Rayleigh coefficients.
pub struct GreenData {
    pub k: f64,
    pub quadrature: FbQuadrature,
    pub sources: Vec<Source>,
    /// Free-space traces and scaled normal derivatives on cell-0 nodes.
    pub traces: Mat<C64>,
    pub traces_dn: Mat<C64>,
    /// `sum_i w_i psi_i^sc` and `sum_i w_i phi_i^sc` on cell-0 nodes.
    pub psi_sc: Mat<C64>,
    pub phi_sc: Mat<C64>,
    /// Total `G` and scaled `dnu_x G` on the nodes of cell `j`.
    pub cells: BTreeMap<i64, (Mat<C64>, Mat<C64>)>,
    pub rayleigh: Vec<RayleighSamples>,
    pub timings: GreenTimings,
    height: f64,
    j_trunc: usize,
}

fn axpy(acc: &mut Mat<C64>, w: C64, x: &Mat<C64>) {
    for j in 0..x.ncols() {
        for i in 0..x.nrows() {
            acc[(i, j)] += w * x[(i, j)];
        }
    }
}

struct NodeSolve {
    psi: Mat<C64>,
    phi: Mat<C64>,
    factor: f64,
    solve: f64,
}

fn solve_node(cell: &CellProblem, alpha: f64, t: &Mat<C64>, dn: &Mat<C64>) -> Result<NodeSolve> {
    let t0 = Instant::now();
    let f = cell.factor(alpha)?;
    let t1 = Instant::now();
    let rhs = cell.rhs(&f, t, dn);
    let (phi, psi) = cell.solve(&f, &rhs);
    let t2 = Instant::now();
    Ok(NodeSolve { psi, phi, factor: (t1 - t0).as_secs_f64(), solve: (t2 - t1).as_secs_f64() })
}

/// Assembles the background Green's function for the given sources on one
/// thread. See [`background_green_threaded`].
pub fn background_green(
    cell: &CellProblem,
    quadrature: &FbQuadrature,
    sources: &[Source],
    cells: &[i64],
    keep_rayleigh: bool,
) -> Result<GreenData> {
    background_green_threaded(cell, quadrature, sources, cells, keep_rayleigh, 1)
}

/// Assembles the background Green's function for the given sources.
///
/// For each quadrature node the cell system is factored once and solved
/// for all sources; weighted densities are accumulated in node order, so
/// the result does not depend on `threads`. Up to `threads` nodes are
/// solved at a time. `cells` lists translated cells whose boundary data is
/// kept; with `keep_rayleigh` the per-node Rayleigh coefficients are stored
/// for evaluation outside the strip.
pub fn background_green_threaded(
    cell: &CellProblem,
    quadrature: &FbQuadrature,
    sources: &[Source],
    cells: &[i64],
    keep_rayleigh: bool,
    threads: usize,
) -> Result<GreenData> {
    if (quadrature.k - cell.k).abs() > 0.0 {
        return Err(Error::Parameter("quadrature and cell use different wavenumbers".into()));
    }
    if threads == 0 {
        return Err(Error::Parameter("thread count must be at least 1".into()));
    }
    let n = cell.len();
    let c = sources.len();
    let (t, dn) = cell.source_traces(sources)?;
    let mut psi0 = Mat::<C64>::zeros(n, c);
    let mut phi0 = Mat::<C64>::zeros(n, c);
    let mut cell_data: BTreeMap<i64, (Mat<C64>, Mat<C64>)> =
        cells.iter().filter(|&&j| j != 0).map(|&j| (j, (Mat::zeros(n, c), Mat::zeros(n, c)))).collect();
    let mut rayleigh = Vec::new();
    let mut timings = GreenTimings::default();
    let nodes: Vec<(f64, f64)> = quadrature.nodes.iter().copied().zip(quadrature.weights.iter().copied()).collect();
    for chunk in nodes.chunks(threads) {
        let solved: Vec<Result<NodeSolve>> = if chunk.len() == 1 {
            vec![solve_node(cell, chunk[0].0, &t, &dn)]
        } else {
            std::thread::scope(|sc| {
                let handles: Vec<_> =
                    chunk.iter().map(|&(alpha, _)| { let (t, dn) = (&t, &dn); sc.spawn(move || solve_node(cell, alpha, t, dn)) }).collect();
                handles.into_iter().map(|h| h.join().expect("quasi-periodic solve panicked")).collect()
            })
        };
        for (&(alpha, w), node) in chunk.iter().zip(solved) {
            let NodeSolve { psi, phi, factor, solve } = node?;
            let t2 = Instant::now();
            let wc = C64::new(w, 0.0);
            axpy(&mut psi0, wc, &psi);
            axpy(&mut phi0, wc, &phi);
            if !cell_data.is_empty() || keep_rayleigh {
                let mut g = psi;
                let mut gd = phi;
                axpy(&mut g, C64::new(1.0, 0.0), &t);
                axpy(&mut gd, C64::new(1.0, 0.0), &dn);
                for (&j, (a, b)) in cell_data.iter_mut() {
                    let ph = phase(alpha * j as f64) * w;
                    axpy(a, ph, &g);
                    axpy(b, ph, &gd);
                }
                if keep_rayleigh {
                    let (top, bottom) = cell.rayleigh_matrices(alpha, &g);
                    rayleigh.push(RayleighSamples { alpha, weight: w, top, bottom });
                }
            }
            timings.factor += factor;
            timings.solve += solve;
            timings.accumulate += t2.elapsed().as_secs_f64();
        }
    }
    if cells.contains(&0) {
        let mut g = psi0.clone();
        let mut gd = phi0.clone();
        axpy(&mut g, C64::new(1.0, 0.0), &t);
        axpy(&mut gd, C64::new(1.0, 0.0), &dn);
        cell_data.insert(0, (g, gd));
    }
    Ok(GreenData {
        k: cell.k,
        quadrature: quadrature.clone(),
        sources: sources.to_vec(),
        traces: t,
        traces_dn: dn,
        psi_sc: psi0,
        phi_sc: phi0,
        cells: cell_data,
        rayleigh,
        timings,
        height: cell.height,
        j_trunc: cell.j_trunc,
    })
}

impl GreenData {
    /// `G(x; source)` for targets in the fluid part of cell 0 (strip),
    /// or `a . grad_x G` with `dirs`. Rows are targets, columns sources;
    /// entries where a target coincides with its source are NaN.
    pub fn eval_cell0(&self, boundary: &Boundary, targets: &[Point2], dirs: Option<&[Point2]>) -> Result<Mat<C64>> {
        let near = targets.iter().any(|&x| {
            let d = boundary.distance_to(x);
            d < 0.5 * max_spacing(boundary)
        });
        if near {
            tracing::warn!("Green's function evaluated within one mesh spacing of the cell boundary");
        }
        let (a, b) = representation(self.k, boundary, targets, dirs)?;
        let mut g = &a * &self.phi_sc + &b * &self.psi_sc;
        for (ti, &x) in targets.iter().enumerate() {
            for (c, s) in self.sources.iter().enumerate() {
                if x == s.point() {
                    g[(ti, c)] = C64::new(f64::NAN, f64::NAN);
                    continue;
                }
                g[(ti, c)] += match dirs {
                    None => s.value(self.k, x),
                    Some(d) => s.deriv(self.k, x, d[ti]),
                };
            }
        }
        Ok(g)
    }

    /// Scattered part `G - (free-space source)` at cell-0 targets.
    pub fn eval_cell0_scattered(&self, boundary: &Boundary, targets: &[Point2], dirs: Option<&[Point2]>) -> Result<Mat<C64>> {
        let (a, b) = representation(self.k, boundary, targets, dirs)?;
        Ok(&a * &self.phi_sc + &b * &self.psi_sc)
    }

    /// Boundary data `(G, scaled dnu_x G)` on the nodes of cell `j`.
    pub fn cell(&self, j: i64) -> Result<&(Mat<C64>, Mat<C64>)> {
        self.cells.get(&j).ok_or_else(|| Error::Parameter(format!("cell {j} was not requested")))
    }

    /// Far-field expansion of the combination `sum_c v_c G(.; source_c)`
    /// valid for `|x2| >= H` in every cell.
    pub fn far_expansion(&self, v: &[C64]) -> Result<FarExpansion> {
        if self.rayleigh.is_empty() {
            return Err(Error::Parameter("Rayleigh coefficients were not kept".into()));
        }
        let vm = Mat::<C64>::from_fn(v.len(), 1, |i, _| v[i]);
        let terms = self
            .rayleigh
            .iter()
            .map(|r| {
                let top = &r.top * &vm;
                let bottom = &r.bottom * &vm;
                (
                    r.weight,
                    RayleighExpansion {
                        k: self.k,
                        alpha: r.alpha,
                        height: self.height,
                        j_trunc: self.j_trunc,
                        top: (0..top.nrows()).map(|i| top[(i, 0)]).collect(),
                        bottom: (0..bottom.nrows()).map(|i| bottom[(i, 0)]).collect(),
                    },
                )
            })
            .collect();
        Ok(FarExpansion { terms })
    }
}

fn max_spacing(b: &Boundary) -> f64 {
    let mut m: f64 = 0.0;
    for r in &b.ranges {
        let n = r.len();
        for j in 0..n {
            let a = b.points[r.start + j];
            let c = b.points[r.start + (j + 1) % n];
            m = m.max((c - a).norm());
        }
    }
    m
}

/// Quadrature-weighted sum of Rayleigh expansions.
#[derive(Clone, Debug)]
pub struct FarExpansion {
    pub terms: Vec<(f64, RayleighExpansion)>,
}

impl FarExpansion {
    pub fn eval(&self, x: Point2) -> Result<(C64, [C64; 2])> {
        let mut v = C64::new(0.0, 0.0);
        let mut g = [C64::new(0.0, 0.0); 2];
        for (w, r) in &self.terms {
            let (a, b) = r.eval(x)?;
            v += a * *w;
            g[0] += b[0] * *w;
            g[1] += b[1] * *w;
        }
        Ok((v, g))
    }

    /// Bound on the contribution at `x` of evanescent orders whose decay
    /// rate `Im beta_l` is at least `min_decay`.
    pub fn evanescent_part(&self, x: Point2, min_decay: f64) -> Result<f64> {
        let mut total = 0.0;
        for (w, r) in &self.terms {
            let (coef, dist) = if x.y >= r.height {
                (&r.top, x.y - r.height)
            } else if x.y <= -r.height {
                (&r.bottom, -x.y - r.height)
            } else {
                return Err(Error::Domain("evanescent audit inside the strip".into()));
            };
            let jt = r.j_trunc as i64;
            for (idx, c) in coef.iter().enumerate() {
                let b = beta(r.k, r.alpha, idx as i64 - jt);
                if b.im > 0.0 && b.im >= min_decay {
                    total += w * c.norm() * (-b.im * dist).exp();
                }
            }
        }
        Ok(total)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kappa_examples() {
        assert_eq!(kappa_of(1.25).unwrap(), 0.25);
        assert_eq!(kappa_of(1.5).unwrap(), 0.5);
        assert_eq!(kappa_of(2.0).unwrap(), 0.0);
        assert!((kappa_of(0.6).unwrap() + 0.4).abs() < 1e-15);
        assert!(kappa_of(0.0).is_err());
    }

    #[test]
    fn half_integer_branch() {
        let q = ifb_quadrature(1.5, 18).unwrap();
        assert_eq!(q.branch, FbBranch::HalfInteger);
        assert_eq!(q.nodes.len(), 18);
        assert!(q.nodes.iter().all(|&a| a > -0.5 && a < 0.5));
        assert!(ifb_quadrature(1.5, 7).is_err());
    }
}
