//! Field evaluation outside the artificial curve: leap to cell boundaries,
//! pullback into cell interiors and Rayleigh evaluation beyond `|x2| = H`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::geometry::Point2;
use crate::layer::{matvec, representation, source_traces, Boundary, Source};
use crate::quasiperiodic::{phase, plane_wave};
use crate::tbc::{Incidence, PerturbedProblem, PerturbedSolution};

/// Total field data on the boundary of cell `j`: traces and scaled normal
/// derivatives on the translated cell nodes (rectangle, then obstacle).
#[derive(Clone, Debug)]
pub struct CellField {
    pub j: i64,
    pub trace: Vec<C64>,
    pub dn: Vec<C64>,
}

/// Index of the cell whose strip contains `x1`.
pub fn cell_index(x1: f64) -> i64 {
    (x1 / (2.0 * PI)).round() as i64
}

fn shift(j: i64) -> Point2 {
    Point2::new(2.0 * PI * j as f64, 0.0)
}

/// Total field and scaled normal derivative on the boundary of cell `j`.
pub fn leap(p: &PerturbedProblem, sol: &PerturbedSolution, j: i64) -> Result<CellField> {
    let (g, gd) = p.green.cell(j)?;
    let v = p.green_weights(sol);
    let mut trace = matvec(g, &v);
    let mut dn = matvec(gd, &v);
    if let Some(r) = &p.reference {
        let e = phase(r.alpha * j as f64);
        let t = r.total_trace(&p.cell);
        let d = r.total_dn(&p.cell);
        for i in 0..trace.len() {
            trace[i] += e * t[i];
            dn[i] += e * d[i];
        }
    }
    Ok(CellField { j, trace, dn })
}

/// Boundary and densities used by the pullback of `field`. For cell 0 the
/// artificial curve closes the region; an exterior point source is
/// subtracted from the data and reported separately.
fn pullback_data(p: &PerturbedProblem, sol: &PerturbedSolution, field: &CellField) -> Result<(Boundary, Vec<C64>, Vec<C64>, Option<Point2>)> {
    if field.j != 0 {
        let b = p.cell.boundary.translated(shift(field.j));
        return Ok((b, field.trace.clone(), field.dn.clone(), None));
    }
    let nr = p.cell.rect.mesh.len();
    let b = Boundary::new(&[&p.cell.rect.mesh, &p.gamma.flipped()]);
    let mut u: Vec<C64> = field.trace[..nr].iter().chain(&sol.u1).copied().collect();
    let mut d: Vec<C64> = field.dn[..nr].to_vec();
    d.extend(sol.phi1.iter().map(|x| -x));
    let src = match (p.incidence, p.source_column) {
        (Incidence::Cylindrical { source }, Some(_)) => Some(source),
        _ => None,
    };
    if let Some(x) = src {
        let (t, dn) = source_traces(p.k, &b, &[Source::Monopole(x)])?;
        for i in 0..u.len() {
            u[i] -= t[(i, 0)];
            d[i] -= dn[(i, 0)];
        }
    }
    Ok((b, u, d, src))
}

/// Total field at targets inside cell `field.j`, outside its obstacle (and
/// outside the artificial curve for cell 0), with `|x2| < H`.
pub fn pullback(p: &PerturbedProblem, sol: &PerturbedSolution, field: &CellField, targets: &[Point2]) -> Result<Vec<C64>> {
    let c = shift(field.j);
    for (t, &x) in targets.iter().enumerate() {
        let y = x - c;
        if !(y.x.abs() <= PI && y.y.abs() <= p.cell.height) {
            return Err(Error::Domain(format!("target {t} is outside cell {}", field.j)));
        }
    }
    let (b, u, d, src) = pullback_data(p, sol, field)?;
    let near = 0.5 * p.cell.rect.mesh.max_spacing();
    if targets.iter().any(|&x| b.distance_to(x) < near) {
        tracing::warn!(cell = field.j, "pullback target within one mesh spacing of the cell boundary");
    }
    let (a, bm) = representation(p.k, &b, targets, None)?;
    let va = matvec(&a, &d);
    let vb = matvec(&bm, &u);
    Ok(targets
        .iter()
        .enumerate()
        .map(|(t, &x)| {
            let s = src.map_or(C64::new(0.0, 0.0), |y| Source::Monopole(y).value(p.k, x));
            va[t] + vb[t] + s
        })
        .collect())
}

/// Total field at targets in the cell-0 strip outside the artificial
/// curve, evaluated directly through the background Green's function.
pub fn direct_cell0(p: &PerturbedProblem, sol: &PerturbedSolution, targets: &[Point2]) -> Result<Vec<C64>> {
    let g = p.green.eval_cell0(&p.cell.boundary, targets, None)?;
    let v = p.green_weights(sol);
    let mut u = matvec(&g, &v);
    if let Some(r) = &p.reference {
        let ur = r.eval_total(&p.cell, targets, None)?;
        for (a, b) in u.iter_mut().zip(ur) {
            *a += b;
        }
    }
    Ok(u)
}

/// Total field at targets with `|x2| >= H`, in any cell.
pub fn far_strip(p: &PerturbedProblem, sol: &PerturbedSolution, targets: &[Point2]) -> Result<Vec<C64>> {
    let h = p.cell.height;
    if let Some(t) = targets.iter().position(|x| x.y.abs() < h) {
        return Err(Error::Domain(format!("target {t} lies inside the strip |x2| < H")));
    }
    let far = p.green.far_expansion(&p.green_weights(sol))?;
    let refr = p.reference.as_ref().map(|r| r.rayleigh(&p.cell));
    targets
        .iter()
        .map(|&x| {
            let mut u = far.eval(x)?.0;
            if let (Some(r), Incidence::Plane { theta }) = (&refr, p.incidence) {
                u += r.eval(x)?.0 + plane_wave(p.k, theta, x);
            }
            Ok(u)
        })
        .collect()
}

/// Evaluates the total field anywhere, caching leaps per cell.
/// Points inside an obstacle evaluate to NaN.
pub struct FieldEvaluator<'a> {
    pub problem: &'a PerturbedProblem,
    pub solution: &'a PerturbedSolution,
    leaps: BTreeMap<i64, CellField>,
}

impl<'a> FieldEvaluator<'a> {
    pub fn new(problem: &'a PerturbedProblem, solution: &'a PerturbedSolution) -> FieldEvaluator<'a> {
        FieldEvaluator { problem, solution, leaps: BTreeMap::new() }
    }

    pub fn cell_field(&mut self, j: i64) -> Result<&CellField> {
        if !self.leaps.contains_key(&j) {
            let f = leap(self.problem, self.solution, j)?;
            self.leaps.insert(j, f);
        }
        Ok(&self.leaps[&j])
    }

    /// True if `x` lies inside the obstacle of its cell.
    pub fn in_obstacle(&self, x: Point2) -> bool {
        let j = cell_index(x.x);
        if j == 0 {
            self.problem.in_perturbed(x)
        } else {
            self.problem.cell.in_obstacle(x - shift(j))
        }
    }

    pub fn eval(&mut self, targets: &[Point2]) -> Result<Vec<C64>> {
        let p = self.problem;
        let h = p.cell.height;
        let mut out = vec![C64::new(f64::NAN, f64::NAN); targets.len()];
        let mut inner = Vec::new();
        let mut far = Vec::new();
        let mut by_cell: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
        for (t, &x) in targets.iter().enumerate() {
            if self.in_obstacle(x) {
                continue;
            }
            let j = cell_index(x.x);
            if x.y.abs() >= h {
                far.push(t);
            } else if j == 0 && p.in_omega_b_closure(x) {
                inner.push(t);
            } else {
                by_cell.entry(j).or_default().push(t);
            }
        }
        let pick = |idx: &[usize]| idx.iter().map(|&t| targets[t]).collect::<Vec<_>>();
        if !inner.is_empty() {
            for (&t, v) in inner.iter().zip(p.eval_in_omega_b(self.solution, &pick(&inner))?) {
                out[t] = v;
            }
        }
        if !far.is_empty() {
            for (&t, v) in far.iter().zip(far_strip(p, self.solution, &pick(&far))?) {
                out[t] = v;
            }
        }
        for (j, idx) in by_cell {
            let pts = pick(&idx);
            let sol = self.solution;
            let field = self.cell_field(j)?;
            for (&t, v) in idx.iter().zip(pullback(p, sol, field, &pts)?) {
                out[t] = v;
            }
        }
        Ok(out)
    }
}
