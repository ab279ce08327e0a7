use std::f64::consts::PI;
use std::sync::OnceLock;

use fbscatter::floquet::{background_green, background_green_threaded, ifb_quadrature};
use fbscatter::geometry::{CurveShape, Point2};
use fbscatter::harness::{background_values, relative_error};
use fbscatter::layer::{column, matvec, source_traces, Source};
use fbscatter::propagate::{direct_cell0, far_strip, leap, FieldEvaluator};
use fbscatter::quasiperiodic::CellProblem;
use fbscatter::tbc::{Incidence, PerturbedProblem, PerturbedSolution, TbcConfig};
use fbscatter::C64;

const K: f64 = 1.25;
const XS: Point2 = Point2::new(2.2, 0.0);

fn disk(r: f64) -> CurveShape {
    CurveShape::Disk { radius: r, center: Point2::default() }
}

fn drop() -> CurveShape {
    CurveShape::Drop { shift: Point2::new(0.0, -3.6) }
}

fn config(perturbed: CurveShape, incidence: Incidence) -> TbcConfig {
    TbcConfig { artificial: disk(2.5), n_artificial: 300, perturbed, m_perturbed: 150, grading: 6, incidence, threads: 1 }
}

struct Case {
    p: PerturbedProblem,
    s: PerturbedSolution,
}

fn build(periodic: CurveShape, cfg: TbcConfig, n: usize, m: usize) -> Case {
    let cell = CellProblem::new(K, PI, &periodic, m, 600, 6, 50).unwrap();
    let q = ifb_quadrature(K, n).unwrap();
    let p = PerturbedProblem::new(cell, &cfg, &q, &[-2, -1, 0, 1, 2], true).unwrap();
    let s = p.solve().unwrap();
    Case { p, s }
}

/// Disk array with the drop in cell 0, point source at (2.2, 0).
fn drop_case() -> &'static Case {
    static C: OnceLock<Case> = OnceLock::new();
    C.get_or_init(|| build(disk(2.0), config(drop(), Incidence::Cylindrical { source: XS }), 16, 150))
}

fn max_norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

#[test]
fn perturbed_obstacle_is_sound_soft() {
    let c = drop_case();
    assert!(max_norm(&c.s.u2) <= 1e-6 * max_norm(&c.s.u1), "{:e}", max_norm(&c.s.u2));
    // the representation inside the inner region vanishes as the obstacle is approached
    let inner = c.p.eval_in_omega_b(&c.s, &[Point2::new(0.0, 1.95), Point2::new(0.0, 2.3)]).unwrap();
    assert!(inner[0].norm() < 0.5 * inner[1].norm());
}

#[test]
fn interior_ntd_reproduces_point_source() {
    let c = drop_case();
    // source inside the perturbed obstacle: smooth in the inner region
    let (t, dn) = source_traces(K, &c.p.omega_b, &[Source::Monopole(Point2::new(0.0, 0.3))]).unwrap();
    let u = column(&t, 0);
    let nu = matvec(&c.p.nhat, &column(&dn, 0));
    assert!(relative_error(&nu, &u) < 1e-8, "{:e}", relative_error(&nu, &u));
}

#[test]
fn background_green_satisfies_its_own_tbc() {
    let c = drop_case();
    let g = background_green(&c.p.cell, &c.p.green.quadrature, &[Source::Monopole(XS)], &[], false).unwrap();
    let gamma = &c.p.gamma;
    let w = g.eval_cell0(&c.p.cell.boundary, &gamma.points, None).unwrap();
    let d = g.eval_cell0(&c.p.cell.boundary, &gamma.points, Some(&gamma.normals)).unwrap();
    let w = column(&w, 0);
    let dw: Vec<C64> = (0..gamma.len()).map(|i| d[(i, 0)] * gamma.sigma[i]).collect();
    let r = c.p.tbc_residual(&w, &dw);
    assert!(max_norm(&r) <= 1e-7 * max_norm(&w), "{:e}", max_norm(&r) / max_norm(&w));
    // the map (K - I)^{-1} S returns the trace
    let nw = matvec(&c.p.tbc.ntd, &dw);
    assert!(relative_error(&nw, &w) < 1e-7);
}

#[test]
fn tbc_single_layer_is_symmetric() {
    let s = &drop_case().p.tbc.s;
    let mut m: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for i in 0..s.nrows() {
        for j in 0..i {
            m = m.max((s[(i, j)] - s[(j, i)]).norm());
            scale = scale.max(s[(i, j)].norm());
        }
    }
    assert!(m <= 1e-7 * scale, "{m:e}");
}

#[test]
fn pullback_matches_direct_green_representation() {
    let c = drop_case();
    let pts = [Point2::new(-2.6, 2.2), Point2::new(2.7, -2.0), Point2::new(0.0, 2.8), Point2::new(-1.0, -2.7)];
    let a = direct_cell0(&c.p, &c.s, &pts).unwrap();
    let b = FieldEvaluator::new(&c.p, &c.s).eval(&pts).unwrap();
    assert!(relative_error(&b, &a) < 1e-6, "{:e}", relative_error(&b, &a));
}

#[test]
fn field_satisfies_helmholtz_equation() {
    let c = drop_case();
    let mut ev = FieldEvaluator::new(&c.p, &c.s);
    let h = 1e-3;
    for x in [Point2::new(2.0 * PI - 0.4, 2.5), Point2::new(-2.7, 2.0), Point2::new(-2.0, -0.5)] {
        let pts = [
            x,
            x + Point2::new(h, 0.0),
            x - Point2::new(h, 0.0),
            x + Point2::new(0.0, h),
            x - Point2::new(0.0, h),
        ];
        let u = ev.eval(&pts).unwrap();
        let lap = (u[1] + u[2] + u[3] + u[4] - u[0] * 4.0) / (h * h);
        let res = (lap + u[0] * K * K).norm();
        assert!(res <= 1e-4 * K * K * u[0].norm(), "{x:?}: {res:e}");
    }
}

#[test]
fn leap_satisfies_dirichlet_on_translated_obstacles() {
    let c = drop_case();
    let start = c.p.cell.obstacle_start();
    for j in [-2, 1, 2] {
        let f = leap(&c.p, &c.s, j).unwrap();
        let scale = max_norm(&f.trace);
        let obs = max_norm(&f.trace[start..]);
        assert!(obs <= 1e-6 * scale, "cell {j}: {obs:e}");
    }
}

#[test]
fn neighbouring_leaps_agree_on_shared_wall() {
    let c = drop_case();
    let rect = &c.p.cell.rect;
    for j in [0, 1, -2] {
        let a = leap(&c.p, &c.s, j).unwrap();
        let b = leap(&c.p, &c.s, j + 1).unwrap();
        let ra: Vec<C64> = rect.right.iter().map(|&i| a.trace[i]).collect();
        let lb: Vec<C64> = rect.left.iter().map(|&i| b.trace[i]).collect();
        assert!(relative_error(&lb, &ra) < 1e-6, "cells {j}/{}: {:e}", j + 1, relative_error(&lb, &ra));
        // normals are opposite on the shared wall
        let da: Vec<C64> = rect.right.iter().map(|&i| a.dn[i]).collect();
        let db: Vec<C64> = rect.left.iter().map(|&i| -b.dn[i]).collect();
        assert!(relative_error(&db, &da) < 1e-6);
    }
}

#[test]
fn far_expansion_continues_strip_field() {
    let c = drop_case();
    let mut ev = FieldEvaluator::new(&c.p, &c.s);
    let top = c.p.cell.rect.top.clone();
    let mut err: f64 = 0.0;
    for j in [0i64, 1] {
        let f = leap(&c.p, &c.s, j).unwrap();
        for &i in top.iter().step_by(7) {
            let x = c.p.cell.boundary.points[i] + Point2::new(2.0 * PI * j as f64, 1e-6);
            let far = far_strip(&c.p, &c.s, &[x]).unwrap()[0];
            err = err.max((far - f.trace[i]).norm());
        }
    }
    assert!(err < 1e-6, "{err:e}");
    // the same holds below, and far targets are finite
    let below = ev.eval(&[Point2::new(0.3, -3.0 * PI), Point2::new(0.3, 3.0 * PI)]).unwrap();
    assert!(below.iter().all(|z| z.is_finite()));
    assert!(far_strip(&c.p, &c.s, &[Point2::new(0.0, 1.0)]).is_err());
}

#[test]
fn perturbation_breaks_quasi_periodicity() {
    let c = drop_case();
    let mut ev = FieldEvaluator::new(&c.p, &c.s);
    let xs = [Point2::new(-2.8, 2.6), Point2::new(2.9, -2.5)];
    let shifted: Vec<Point2> = xs.iter().map(|&x| x + Point2::new(2.0 * PI, 0.0)).collect();
    let u = ev.eval(&xs).unwrap();
    let v = ev.eval(&shifted).unwrap();
    let r0 = v[0] / u[0];
    let r1 = v[1] / u[1];
    assert!((r0 - r1).norm() > 1e-3 * r0.norm());
}

#[test]
fn obstacle_points_are_nan() {
    let c = drop_case();
    let mut ev = FieldEvaluator::new(&c.p, &c.s);
    let u = ev.eval(&[Point2::new(0.0, 0.0), Point2::new(2.0 * PI + 0.5, 0.5), Point2::new(0.0, 2.2)]).unwrap();
    assert!(u[0].re.is_nan() && u[1].re.is_nan());
    assert!(u[2].is_finite());
}

#[test]
fn exterior_source_route_reproduces_background_field() {
    // square array, source above the elliptic artificial curve
    let sq = CurveShape::Square { side: 3.0, center: Point2::default() };
    let src = Point2::new(0.0, 3.0);
    let cfg = TbcConfig {
        artificial: CurveShape::Ellipse { semi_axes: [2.8, 2.5], center: Point2::default() },
        m_perturbed: 300,
        ..config(sq.clone(), Incidence::Cylindrical { source: src })
    };
    let c = build(sq, cfg, 16, 300);
    assert!(c.p.source_column.is_some());
    let pts = [
        Point2::new(0.5, 2.7),
        Point2::new(-2.9, 0.4),
        Point2::new(0.3, 1.9),
        Point2::new(2.0 * PI + 2.2, -2.1),
        Point2::new(-2.0 * PI - 0.3, 2.2),
    ];
    let u = FieldEvaluator::new(&c.p, &c.s).eval(&pts).unwrap();
    let g = background_values(&c.p, Source::Monopole(src), &pts).unwrap();
    for (a, b) in u.iter().zip(&g) {
        assert!((a - b).norm() <= 1e-6 * b.norm(), "{a} {b}");
    }
}

#[test]
fn invalid_geometries_are_rejected() {
    let cell = CellProblem::new(K, PI, &disk(2.0), 64, 240, 6, 30).unwrap();
    let q = ifb_quadrature(K, 4).unwrap();
    let inc = Incidence::Cylindrical { source: XS };
    let small = TbcConfig { artificial: disk(1.9), ..config(drop(), inc) };
    assert!(PerturbedProblem::new(cell, &small, &q, &[], false).is_err());
    let cell = CellProblem::new(K, PI, &disk(2.0), 64, 240, 6, 30).unwrap();
    let cornered = TbcConfig { artificial: CurveShape::Square { side: 5.0, center: Point2::default() }, ..config(drop(), inc) };
    assert!(PerturbedProblem::new(cell, &cornered, &q, &[], false).is_err());
    let cell = CellProblem::new(K, PI, &disk(2.0), 64, 240, 6, 30).unwrap();
    let inside = config(drop(), Incidence::Cylindrical { source: Point2::new(0.0, 0.5) });
    assert!(PerturbedProblem::new(cell, &inside, &q, &[], false).is_err());
}

#[test]
fn threaded_assembly_is_bitwise_identical() {
    let cell = CellProblem::new(K, PI, &disk(2.0), 64, 240, 6, 30).unwrap();
    let q = ifb_quadrature(K, 6).unwrap();
    let src = [Source::Monopole(XS), Source::Dipole(Point2::new(-2.4, 1.0), Point2::new(0.0, 1.0))];
    let a = background_green_threaded(&cell, &q, &src, &[-1, 1], true, 1).unwrap();
    let b = background_green_threaded(&cell, &q, &src, &[-1, 1], true, 4).unwrap();
    assert!(a.psi_sc == b.psi_sc && a.phi_sc == b.phi_sc);
    assert!(a.cell(1).unwrap().0 == b.cell(1).unwrap().0);
    assert!(background_green_threaded(&cell, &q, &src, &[], false, 0).is_err());
}
