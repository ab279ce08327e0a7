use std::f64::consts::PI;

use super::curve::{CurveShape, ParamCurve};
use super::Point2;
use crate::error::{Error, Result};
use crate::kernels::gauss_legendre;

/// Polynomial grading map from `[t_b, t_e]` onto `[s_b, s_e]`.
///
/// Returns `(eta(t), eta'(t))`. The map is monotone, hits both ends and
/// has its first `p - 1` derivatives vanishing there.
pub fn graded_map(t: f64, t_b: f64, t_e: f64, s_b: f64, s_e: f64, p: u32) -> (f64, f64) {
    let pf = p as f64;
    let xi = ((t_b + t_e) - 2.0 * t) / (t_e - t_b);
    let c3 = 0.5 - 1.0 / pf;
    let e1 = c3 * xi * xi * xi + xi / pf + 0.5;
    let e2 = 1.0 - e1;
    let d1 = 3.0 * c3 * xi * xi + 1.0 / pf;
    let a = e1.powi(p as i32);
    let b = e2.powi(p as i32);
    let den = a + b;
    let eta = (s_b * a + s_e * b) / den;
    let deta = (s_e - s_b) * 2.0 * pf * d1 * (e1 * e2).powi(p as i32 - 1) / (den * den * (t_e - t_b));
    (eta, deta)
}

/// Discretized closed curve on a uniform computational grid
/// `t_j = j h`, `h = 2 pi / n`.
#[derive(Clone, Debug)]
pub struct BoundaryMesh {
    pub t: Vec<f64>,
    pub points: Vec<Point2>,
    /// Unit normals, outward from the enclosed region unless flipped.
    pub normals: Vec<Point2>,
    /// Scaled speed `|dx/dt|`; zero at corners.
    pub sigma: Vec<f64>,
    /// `(x'' . nu) / |x'|` in the computational parameter; zero at corners.
    pub kappa: Vec<f64>,
    pub corner: Vec<bool>,
    pub h: f64,
}

impl BoundaryMesh {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Same nodes with normals reversed.
    pub fn flipped(&self) -> BoundaryMesh {
        let mut m = self.clone();
        for v in &mut m.normals {
            *v = -*v;
        }
        for v in &mut m.kappa {
            *v = -*v;
        }
        m
    }

    /// Rigid translation.
    pub fn translated(&self, d: Point2) -> BoundaryMesh {
        let mut m = self.clone();
        for v in &mut m.points {
            *v = *v + d;
        }
        m
    }

    /// Quadrature weights `h sigma_j` for line integrals.
    pub fn weights(&self) -> Vec<f64> {
        self.sigma.iter().map(|s| self.h * s).collect()
    }

    /// Minimum distance from `x` to the nodes.
    pub fn distance_to(&self, x: Point2) -> f64 {
        self.points.iter().map(|p| (*p - x).norm()).fold(f64::INFINITY, f64::min)
    }

    /// Largest node spacing.
    pub fn max_spacing(&self) -> f64 {
        let n = self.len();
        (0..n).map(|j| (self.points[(j + 1) % n] - self.points[j]).norm()).fold(0.0, f64::max)
    }
}

fn arclength(curve: &dyn ParamCurve, a: f64, b: f64) -> f64 {
    let (x, w) = gauss_legendre(32).expect("fixed rule");
    let pieces = 16;
    let mut total = 0.0;
    for q in 0..pieces {
        let lo = a + (b - a) * q as f64 / pieces as f64;
        let hi = a + (b - a) * (q + 1) as f64 / pieces as f64;
        let (m, r) = (0.5 * (lo + hi), 0.5 * (hi - lo));
        total += x.iter().zip(&w).map(|(x, w)| w * r * curve.eval(m + r * x).1.norm()).sum::<f64>();
    }
    total
}

/// Meshes a curve with `n` nodes and grading exponent `p`.
///
/// Smooth curves get uniform parameter spacing. Curves with corners get a
/// corner node at every corner and per-arc node counts proportional to arc
/// length.
pub fn build_mesh(shape: &CurveShape, n: usize, p: u32) -> Result<BoundaryMesh> {
    let curve = shape.curve()?;
    let corners = curve.corners();
    if corners.is_empty() {
        return mesh_smooth(curve.as_ref(), n);
    }
    let period = curve.period();
    let m = corners.len();
    let lens: Vec<f64> = (0..m)
        .map(|i| {
            let e = if i + 1 < m { corners[i + 1] } else { corners[0] + period };
            arclength(curve.as_ref(), corners[i], e)
        })
        .collect();
    let total: f64 = lens.iter().sum();
    // largest remainder allocation
    let raw: Vec<f64> = lens.iter().map(|l| n as f64 * l / total).collect();
    let mut counts: Vec<usize> = raw.iter().map(|r| r.floor() as usize).collect();
    let mut rest = n - counts.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| (raw[b] - raw[b].floor()).total_cmp(&(raw[a] - raw[a].floor())).then(a.cmp(&b)));
    for &i in order.iter().cycle() {
        if rest == 0 {
            break;
        }
        counts[i] += 1;
        rest -= 1;
    }
    build_graded(curve.as_ref(), &corners, &counts, p)
}

/// Meshes a cornered curve with explicit per-arc interval counts.
pub fn build_mesh_with_counts(shape: &CurveShape, counts: &[usize], p: u32) -> Result<BoundaryMesh> {
    let curve = shape.curve()?;
    let corners = curve.corners();
    if corners.len() != counts.len() {
        return Err(Error::Meshing(format!(
            "curve has {} arcs but {} counts were given",
            corners.len(),
            counts.len()
        )));
    }
    build_graded(curve.as_ref(), &corners, counts, p)
}

fn check_count(n: usize) -> Result<()> {
    if n < 4 || !n.is_multiple_of(2) {
        return Err(Error::Meshing(format!("node count must be even and at least 4, got {n}")));
    }
    Ok(())
}

fn mesh_smooth(curve: &dyn ParamCurve, n: usize) -> Result<BoundaryMesh> {
    check_count(n)?;
    let h = 2.0 * PI / n as f64;
    let scale = curve.period() / (2.0 * PI);
    let mut raw = Vec::with_capacity(n);
    for j in 0..n {
        let t = j as f64 * h;
        let (x, d1, d2) = curve.eval(t * scale);
        raw.push((t, x, d1, d2, scale));
    }
    finish(raw, h, &vec![false; n])
}

fn build_graded(curve: &dyn ParamCurve, corners: &[f64], counts: &[usize], p: u32) -> Result<BoundaryMesh> {
    if p < 2 {
        return Err(Error::Meshing(format!("grading exponent must be at least 2, got {p}")));
    }
    let n: usize = counts.iter().sum();
    check_count(n)?;
    if let Some(c) = counts.iter().find(|&&c| c < 2) {
        return Err(Error::Meshing(format!("every arc needs at least 2 intervals, got {c}")));
    }
    let period = curve.period();
    let h = 2.0 * PI / n as f64;
    let m = corners.len();
    let mut raw = Vec::with_capacity(n);
    let mut corner = Vec::with_capacity(n);
    let mut start = 0usize;
    for i in 0..m {
        let sb = corners[i];
        let se = if i + 1 < m { corners[i + 1] } else { corners[0] + period };
        let tb = start as f64 * h;
        let te = (start + counts[i]) as f64 * h;
        for j in start..start + counts[i] {
            let t = j as f64 * h;
            let (s, ds) = if j == start { (sb, 0.0) } else { graded_map(t, tb, te, sb, se, p) };
            let (x, d1, d2) = curve.eval(s);
            raw.push((t, x, d1, d2, ds));
            corner.push(j == start);
        }
        start += counts[i];
    }
    finish(raw, h, &corner)
}

type RawNode = (f64, Point2, Point2, Point2, f64);

fn finish(raw: Vec<RawNode>, h: f64, corner: &[bool]) -> Result<BoundaryMesh> {
    let n = raw.len();
    let area: f64 = (0..n).map(|j| raw[j].1.cross(raw[(j + 1) % n].1)).sum::<f64>() * 0.5;
    if area == 0.0 || !area.is_finite() {
        return Err(Error::Meshing("degenerate curve".into()));
    }
    let orient = area.signum();
    let mut mesh = BoundaryMesh {
        t: Vec::with_capacity(n),
        points: Vec::with_capacity(n),
        normals: Vec::with_capacity(n),
        sigma: Vec::with_capacity(n),
        kappa: Vec::with_capacity(n),
        corner: corner.to_vec(),
        h,
    };
    for (j, (t, x, d1, d2, ds)) in raw.into_iter().enumerate() {
        let speed = d1.norm();
        if !(speed > 0.0) {
            return Err(Error::Meshing(format!("vanishing curve speed at node {j}")));
        }
        let nu = d1.perp_right() * (orient / speed);
        mesh.t.push(t);
        mesh.points.push(x);
        mesh.normals.push(nu);
        if corner[j] {
            mesh.sigma.push(0.0);
            mesh.kappa.push(0.0);
        } else {
            mesh.sigma.push(speed * ds);
            mesh.kappa.push(d2.dot(nu) * ds / speed);
        }
    }
    Ok(mesh)
}

/// The cell rectangle `[-pi, pi] x [-H, H]` with its side classification.
///
/// Corner nodes belong to the bottom and top sides. `left[i]` and
/// `right[i]` are exact horizontal translates of each other.
#[derive(Clone, Debug)]
pub struct CellRect {
    pub mesh: BoundaryMesh,
    pub height: f64,
    pub left: Vec<usize>,
    pub right: Vec<usize>,
    pub bottom: Vec<usize>,
    pub top: Vec<usize>,
}

impl CellRect {
    pub fn new(height: f64, n: usize, p: u32) -> Result<CellRect> {
        if !(height > 0.0) || !height.is_finite() {
            return Err(Error::Parameter(format!("cell half-height must be positive, got {height}")));
        }
        check_count(n)?;
        let nv = ((n as f64) * 2.0 * height / (2.0 * (2.0 * PI + 2.0 * height))).round() as usize;
        let nh = (n / 2).saturating_sub(nv);
        if nv < 2 || nh < 2 {
            return Err(Error::Meshing(format!("rectangle node count {n} too small for aspect ratio")));
        }
        let shape = CurveShape::Rectangle { width: 2.0 * PI, height: 2.0 * height, center: Point2::default() };
        let mut mesh = build_mesh_with_counts(&shape, &[nh, nv, nh, nv], p)?;
        let bottom: Vec<usize> = (0..=nh).collect();
        let right: Vec<usize> = (nh + 1..nh + nv).collect();
        let top: Vec<usize> = (nh + nv..=2 * nh + nv).collect();
        // left side runs downward; pair with right nodes at equal height
        let left: Vec<usize> = (2 * nh + nv + 1..n).rev().collect();
        for (&l, &r) in left.iter().zip(&right) {
            let pr = mesh.points[r];
            mesh.points[l] = Point2::new(pr.x - 2.0 * PI, pr.y);
            mesh.sigma[l] = mesh.sigma[r];
            mesh.kappa[l] = 0.0;
            mesh.kappa[r] = 0.0;
        }
        for i in bottom.iter().chain(&top) {
            mesh.kappa[*i] = 0.0;
        }
        for &i in &bottom {
            mesh.points[i].y = -height;
        }
        for &i in &top {
            mesh.points[i].y = height;
        }
        Ok(CellRect { mesh, height, left, right, bottom, top })
    }
}
