//! Run configuration, experiment orchestration and file output.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::floquet::{ifb_quadrature, FbBranch, GreenTimings};
use crate::geometry::{polygon_contains, CurveShape, Point2};
use crate::layer::Source;
use crate::propagate::FieldEvaluator;
use crate::quasiperiodic::CellProblem;
use crate::tbc::{Incidence, PerturbedProblem, PerturbedSolution, SetupTimings, TbcConfig};

/// Number of probes on the artificial curve used for `E_rel`.
pub const PROBES: usize = 300;

fn default_artificial() -> CurveShape {
    CurveShape::Disk { radius: 2.5, center: Point2::default() }
}
fn default_height() -> f64 {
    PI
}
fn default_m() -> usize {
    150
}
fn default_n_rect() -> usize {
    600
}
fn default_n_artificial() -> usize {
    300
}
fn default_fb() -> usize {
    32
}
fn default_j() -> usize {
    50
}
fn default_p() -> u32 {
    6
}
fn default_cells() -> [i64; 2] {
    [-2, 2]
}
fn default_grid() -> [usize; 2] {
    [50, 50]
}
fn default_threads() -> usize {
    1
}

/// Output file names, relative to the output directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSpec {
    pub dir: PathBuf,
    pub field: String,
    pub trace: String,
    pub manifest: String,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec {
            dir: PathBuf::from("out"),
            field: "field.csv".into(),
            trace: "trace.csv".into(),
            manifest: "manifest.json".into(),
        }
    }
}

/// A complete description of one computation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub name: String,
    pub k: f64,
    pub incidence: Incidence,
    /// Obstacle repeated in every cell.
    pub periodic: CurveShape,
    /// Obstacle replacing it in cell 0.
    pub perturbed: CurveShape,
    #[serde(default = "default_artificial")]
    pub artificial: CurveShape,
    /// Half-height `H` of the cell rectangle.
    #[serde(default = "default_height", rename = "H")]
    pub height: f64,
    /// Nodes on the periodic obstacle.
    #[serde(default = "default_m", rename = "M")]
    pub m: usize,
    /// Nodes on the perturbed obstacle; defaults to `M`.
    #[serde(default, rename = "M_perturbed")]
    pub m_perturbed: Option<usize>,
    /// Nodes on the cell rectangle.
    #[serde(default = "default_n_rect", rename = "N")]
    pub n_rect: usize,
    #[serde(default = "default_n_artificial", rename = "N_p")]
    pub n_artificial: usize,
    /// Floquet-Bloch quadrature nodes.
    #[serde(default = "default_fb", rename = "n")]
    pub fb_nodes: usize,
    #[serde(default = "default_j")]
    pub j_trunc: usize,
    /// Grading exponent.
    #[serde(default = "default_p")]
    pub p: u32,
    /// First and last cell of the output window.
    #[serde(default = "default_cells")]
    pub cells: [i64; 2],
    /// Grid points per cell in `x1` and `x2`.
    #[serde(default = "default_grid")]
    pub grid: [usize; 2],
    #[serde(default = "default_threads")]
    pub threads: usize,
    #[serde(default)]
    pub output: OutputSpec,
}

fn invalid(field: &str, message: impl Into<String>) -> Error {
    Error::Validation { field: field.into(), message: message.into() }
}

/// Sweepable resolution parameters.
pub const SWEEP_VARS: [&str; 4] = ["n", "M", "N", "N_p"];

impl RunConfig {
    pub fn from_json(text: &str) -> Result<RunConfig> {
        let cfg: RunConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = fs::read_to_string(path).map_err(|e| invalid("config", format!("{}: {e}", path.display())))?;
        RunConfig::from_json(&text)
    }

    pub fn m_perturbed(&self) -> usize {
        self.m_perturbed.unwrap_or(self.m)
    }

    /// Checks every invariant, naming the first offending field.
    pub fn validate(&self) -> Result<()> {
        if !(self.k > 0.0) || !self.k.is_finite() {
            return Err(invalid("k", format!("wavenumber must be positive and finite, got {}", self.k)));
        }
        if !(self.height > 0.0) || !self.height.is_finite() {
            return Err(invalid("H", format!("must be positive, got {}", self.height)));
        }
        for (name, v) in [("M", self.m), ("M_perturbed", self.m_perturbed()), ("N", self.n_rect), ("N_p", self.n_artificial)] {
            if v < 4 || v % 2 != 0 {
                return Err(invalid(name, format!("must be even and at least 4, got {v}")));
            }
        }
        if self.fb_nodes < 2 || !self.fb_nodes.is_multiple_of(2) {
            return Err(invalid("n", format!("must be even and at least 2, got {}", self.fb_nodes)));
        }
        if (self.j_trunc as f64) < self.k {
            return Err(invalid("j_trunc", format!("must cover the propagating orders (>= k), got {}", self.j_trunc)));
        }
        if self.p < 2 {
            return Err(invalid("p", format!("grading exponent must be at least 2, got {}", self.p)));
        }
        if self.cells[0] > self.cells[1] {
            return Err(invalid("cells", format!("first cell {} exceeds last cell {}", self.cells[0], self.cells[1])));
        }
        if self.grid[0] == 0 || self.grid[1] == 0 {
            return Err(invalid("grid", "needs at least one point per direction"));
        }
        if self.threads == 0 {
            return Err(invalid("threads", "must be at least 1"));
        }
        let mut outlines = Vec::new();
        for (name, shape) in [("periodic", &self.periodic), ("perturbed", &self.perturbed), ("artificial", &self.artificial)] {
            shape.validate().map_err(|e| invalid(name, e.to_string()))?;
            let pts = shape.sample(2048).map_err(|e| invalid(name, e.to_string()))?;
            let ymax = pts.iter().map(|p| p.y.abs()).fold(0.0, f64::max);
            let xmax = pts.iter().map(|p| p.x.abs()).fold(0.0, f64::max);
            if xmax >= PI {
                return Err(invalid(name, format!("curve reaches |x1| = {xmax:.4}, outside the cell (-pi, pi)")));
            }
            if ymax >= self.height {
                return Err(invalid("H", format!("H = {} does not exceed the {name} curve extent {ymax:.4}", self.height)));
            }
            outlines.push(pts);
        }
        let gamma = &outlines[2];
        for (name, o) in [("periodic", &outlines[0]), ("perturbed", &outlines[1])] {
            if !o.iter().all(|&x| polygon_contains(gamma, x)) {
                return Err(invalid("artificial", format!("must enclose the {name} obstacle")));
            }
        }
        match self.incidence {
            Incidence::Plane { theta } => {
                if !(theta > 0.0 && theta < PI) {
                    return Err(invalid("incidence.theta", format!("must lie in (0, pi), got {theta}")));
                }
            }
            Incidence::Cylindrical { source } => {
                if !(source.x.is_finite() && source.y.is_finite()) {
                    return Err(invalid("incidence.source", "must be finite"));
                }
                if source.y.abs() >= self.height {
                    return Err(invalid("H", format!("H = {} does not exceed |x2*| = {}", self.height, source.y.abs())));
                }
                if source.x.abs() >= PI {
                    return Err(invalid("incidence.source", "must lie in cell 0, |x1| < pi"));
                }
                if polygon_contains(&outlines[1], source) {
                    return Err(invalid("incidence.source", "lies inside the perturbed obstacle"));
                }
                if !polygon_contains(gamma, source) && polygon_contains(&outlines[0], source) {
                    return Err(invalid("incidence.source", "lies inside the periodic obstacle"));
                }
            }
        }
        Ok(())
    }

    /// Returns a copy with one resolution parameter replaced.
    pub fn with_var(&self, var: &str, value: usize) -> Result<RunConfig> {
        let mut c = self.clone();
        match var {
            "n" => c.fb_nodes = value,
            "M" => c.m = value,
            "N" => c.n_rect = value,
            "N_p" => c.n_artificial = value,
            _ => return Err(invalid("sweep", format!("unknown variable `{var}`, expected one of {SWEEP_VARS:?}"))),
        }
        c.validate()?;
        Ok(c)
    }

    fn tbc_config(&self) -> TbcConfig {
        TbcConfig {
            artificial: self.artificial.clone(),
            n_artificial: self.n_artificial,
            perturbed: self.perturbed.clone(),
            m_perturbed: self.m_perturbed(),
            grading: self.p,
            incidence: self.incidence,
            threads: self.threads,
        }
    }

    fn cell(&self) -> Result<CellProblem> {
        CellProblem::new(self.k, self.height, &self.periodic, self.m, self.n_rect, self.p, self.j_trunc)
    }
}

/// Wall-clock timings in seconds.
#[derive(Clone, Debug, Default, Serialize)]
pub struct RunTimings {
    /// Full perturbed solve: cell assembly, background Green's function,
    /// TBC, coupled solve and the field on the probes.
    pub t_nq: f64,
    /// One quasi-periodic problem at a single quasimomentum: factor,
    /// solve and field evaluation on the probes.
    pub t_q: f64,
    /// `t_q` plus the assembly of the cell operators.
    pub t_q_with_assembly: f64,
    pub ratio: f64,
    pub ratio_with_assembly: f64,
    pub cell_assembly: f64,
    pub setup: SetupTimings,
    pub green: GreenTimings,
    pub solve: f64,
}

/// A solved configuration.
pub struct Run {
    pub config: RunConfig,
    pub problem: PerturbedProblem,
    pub solution: PerturbedSolution,
    /// Total field at the probes on the artificial curve.
    pub probes: Vec<C64>,
    pub timings: RunTimings,
}

/// Parameter values of the probes on the artificial curve.
pub fn probe_parameters(count: usize) -> Vec<f64> {
    (0..count).map(|i| 2.0 * PI * i as f64 / count as f64).collect()
}

/// Trigonometric interpolation of equispaced samples `u(2 pi j / n)`.
pub fn trig_interpolate(u: &[C64], at: &[f64]) -> Vec<C64> {
    let n = u.len();
    let half = (n / 2) as i64;
    let modes: Vec<(i64, C64)> = (-half..=half)
        .map(|m| {
            let c: C64 = u
                .iter()
                .enumerate()
                .map(|(j, v)| v * C64::from_polar(1.0, -(m as f64) * 2.0 * PI * j as f64 / n as f64))
                .sum::<C64>()
                / n as f64;
            let c = if n.is_multiple_of(2) && m.abs() == half { c * 0.5 } else { c };
            (m, c)
        })
        .collect();
    at.iter().map(|&t| modes.iter().map(|(m, c)| c * C64::from_polar(1.0, *m as f64 * t)).sum()).collect()
}

/// `||a - r||_inf / ||r||_inf`.
pub fn relative_error(a: &[C64], r: &[C64]) -> f64 {
    let scale = r.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let diff = a.iter().zip(r).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
    diff / scale
}

/// Time of one quasi-periodic problem with the incident field of `cfg`:
/// `(assembly, factor + solve + evaluation on the probes)`.
pub fn time_single_alpha(cfg: &RunConfig) -> Result<(f64, f64)> {
    let t0 = Instant::now();
    let cell = cfg.cell()?;
    let t1 = Instant::now();
    let probes = trig_points(&cfg.artificial, PROBES)?;
    let t2 = Instant::now();
    let q = ifb_quadrature(cfg.k, cfg.fb_nodes)?;
    let sol = match cfg.incidence {
        Incidence::Cylindrical { source } => cell.solve_point_source(q.nodes[0], Source::Monopole(source))?,
        Incidence::Plane { theta } => cell.solve_reference_plane(theta)?,
    };
    let targets: Vec<Point2> = probes.into_iter().filter(|&x| !cell.in_obstacle(x)).collect();
    let u = sol.eval_total(&cell, &targets, None)?;
    let t3 = Instant::now();
    if u.iter().any(|z| !z.is_finite()) {
        return Err(Error::Singular("single quasi-periodic solve produced non-finite values".into()));
    }
    Ok(((t1 - t0).as_secs_f64(), (t3 - t2).as_secs_f64()))
}

fn trig_points(shape: &CurveShape, count: usize) -> Result<Vec<Point2>> {
    let curve = shape.curve()?;
    let scale = curve.period() / (2.0 * PI);
    Ok(probe_parameters(count).into_iter().map(|t| curve.eval(t * scale).0).collect())
}

/// Solves a configuration and measures `T_nq` and `T_q`.
pub fn solve(cfg: &RunConfig) -> Result<Run> {
    cfg.validate()?;
    let cells: Vec<i64> = (cfg.cells[0].min(-1)..=cfg.cells[1].max(1)).collect();
    let t0 = Instant::now();
    let cell = cfg.cell()?;
    let t1 = Instant::now();
    let q = ifb_quadrature(cfg.k, cfg.fb_nodes)?;
    let problem = PerturbedProblem::new(cell, &cfg.tbc_config(), &q, &cells, true)?;
    let t2 = Instant::now();
    let solution = problem.solve()?;
    let probes = trig_interpolate(&solution.u1, &probe_parameters(PROBES));
    let t3 = Instant::now();
    if probes.iter().any(|z| !z.is_finite()) {
        return Err(Error::Singular("perturbed solve produced non-finite values".into()));
    }
    let t_nq = (t3 - t0).as_secs_f64();
    let (assembly, t_q) = time_single_alpha(cfg)?;
    let timings = RunTimings {
        t_nq,
        t_q,
        t_q_with_assembly: t_q + assembly,
        ratio: t_nq / t_q,
        ratio_with_assembly: t_nq / (t_q + assembly),
        cell_assembly: (t1 - t0).as_secs_f64(),
        setup: problem.timings.clone(),
        green: problem.green.timings.clone(),
        solve: (t3 - t2).as_secs_f64(),
    };
    Ok(Run { config: cfg.clone(), problem, solution, probes, timings })
}

/// Points of the output grid, row-major over the whole window: `x2`
/// ascending by rows, `x1` ascending within a row. Grid points are cell
/// centred over `(2 pi j - pi, 2 pi j + pi) x (-H, H)` for each cell.
pub fn grid_points(cfg: &RunConfig) -> Vec<Point2> {
    let [nx, ny] = cfg.grid;
    let ncell = (cfg.cells[1] - cfg.cells[0] + 1) as usize;
    let x0 = 2.0 * PI * cfg.cells[0] as f64 - PI;
    let dx = 2.0 * PI / nx as f64;
    let dy = 2.0 * cfg.height / ny as f64;
    let mut out = Vec::with_capacity(nx * ny * ncell);
    for r in 0..ny {
        let y = -cfg.height + (r as f64 + 0.5) * dy;
        for c in 0..nx * ncell {
            out.push(Point2::new(x0 + (c as f64 + 0.5) * dx, y));
        }
    }
    out
}

fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else {
        format!("{x:.17e}")
    }
}

/// Evaluates the total field on the output grid; NaN inside obstacles.
pub fn field_grid(run: &Run) -> Result<(Vec<Point2>, Vec<C64>)> {
    let pts = grid_points(&run.config);
    let lo = run.config.cells[0];
    let hi = run.config.cells[1];
    let mut ev = FieldEvaluator::new(&run.problem, &run.solution);
    for j in lo..=hi {
        if run.problem.green.cell(j).is_err() {
            return Err(Error::Domain(format!("cell {j} is outside the computed cells")));
        }
    }
    let u = ev.eval(&pts)?;
    Ok((pts, u))
}

/// Writes the field grid CSV.
pub fn export_grid(run: &Run, path: &Path) -> Result<usize> {
    let (pts, u) = field_grid(run)?;
    let mut s = String::with_capacity(pts.len() * 100);
    s.push_str("x1 (length),x2 (length),re_u (field),im_u (field)\n");
    for (x, v) in pts.iter().zip(&u) {
        let _ = writeln!(s, "{},{},{},{}", fmt_f64(x.x), fmt_f64(x.y), fmt_f64(v.re), fmt_f64(v.im));
    }
    write_file(path, &s)?;
    Ok(pts.len())
}

/// Writes the total field and its normal derivative on the artificial curve.
pub fn export_trace(run: &Run, path: &Path) -> Result<()> {
    let g = &run.problem.gamma;
    let mut s = String::new();
    s.push_str("t (parameter),x1 (length),x2 (length),re_u (field),im_u (field),re_dnu (field/length),im_dnu (field/length)\n");
    for i in 0..g.len() {
        let d = run.solution.phi1[i] / g.sigma[i];
        let u = run.solution.u1[i];
        let p = g.points[i];
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            fmt_f64(g.t[i]),
            fmt_f64(p.x),
            fmt_f64(p.y),
            fmt_f64(u.re),
            fmt_f64(u.im),
            fmt_f64(d.re),
            fmt_f64(d.im)
        );
    }
    write_file(path, &s)
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    fs::write(path, text)?;
    Ok(())
}

fn branch_name(b: FbBranch) -> &'static str {
    match b {
        FbBranch::Split => "split",
        FbBranch::HalfInteger => "half_integer",
        FbBranch::Integer => "integer",
    }
}

/// Everything that determines a run, plus its timings.
#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub program: String,
    pub version: String,
    pub config: RunConfig,
    pub kappa: f64,
    pub branch: String,
    pub fb_nodes: Vec<f64>,
    pub fb_weights: Vec<f64>,
    pub anomaly_gap: f64,
    pub probes: usize,
    pub outputs: Vec<String>,
    pub timings: RunTimings,
}

pub fn manifest(run: &Run, outputs: Vec<String>) -> Manifest {
    let q = &run.problem.green.quadrature;
    Manifest {
        program: "fbscatter".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config: run.config.clone(),
        kappa: q.kappa,
        branch: branch_name(q.branch).into(),
        fb_nodes: q.nodes.clone(),
        fb_weights: q.weights.clone(),
        anomaly_gap: q.anomaly_gap(),
        probes: PROBES,
        outputs,
        timings: run.timings.clone(),
    }
}

/// Files written by [`run`].
#[derive(Clone, Debug)]
pub struct RunArtifacts {
    pub field: PathBuf,
    pub trace: PathBuf,
    pub manifest: PathBuf,
    pub rows: usize,
}

/// Solves, then writes the field grid, the trace on the artificial curve
/// and the manifest into `cfg.output.dir`.
pub fn run(cfg: &RunConfig) -> Result<(Run, RunArtifacts)> {
    let r = solve(cfg)?;
    let dir = &cfg.output.dir;
    let field = dir.join(&cfg.output.field);
    let trace = dir.join(&cfg.output.trace);
    let man = dir.join(&cfg.output.manifest);
    let rows = export_grid(&r, &field)?;
    export_trace(&r, &trace)?;
    let m = manifest(&r, vec![cfg.output.field.clone(), cfg.output.trace.clone()]);
    write_file(&man, &(serde_json::to_string_pretty(&m)? + "\n"))?;
    Ok((r, RunArtifacts { field, trace, manifest: man, rows }))
}

/// One line of a convergence study.
#[derive(Clone, Debug, Serialize)]
pub struct SweepEntry {
    pub value: usize,
    pub e_rel: f64,
    pub seconds: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceRecord {
    pub variable: String,
    pub reference: usize,
    pub reference_seconds: f64,
    pub reference_config: RunConfig,
    pub entries: Vec<SweepEntry>,
}

impl ConvergenceRecord {
    pub fn table(&self) -> String {
        let mut s = format!("{} (count),e_rel (relative),seconds (s)\n", self.variable);
        for e in &self.entries {
            let _ = writeln!(s, "{},{},{}", e.value, fmt_f64(e.e_rel), fmt_f64(e.seconds));
        }
        s
    }
}

/// Self-convergence in one resolution parameter against a reference run.
/// The reference value is dropped from the sweep.
pub fn converge(cfg: &RunConfig, var: &str, values: &[usize], reference: usize) -> Result<ConvergenceRecord> {
    if !SWEEP_VARS.contains(&var) {
        return Err(invalid("sweep", format!("unknown variable `{var}`, expected one of {SWEEP_VARS:?}")));
    }
    if let Some(&v) = values.iter().find(|&&v| v > reference) {
        return Err(invalid("reference", format!("reference {reference} is below sweep value {v}")));
    }
    let rcfg = cfg.with_var(var, reference)?;
    let configs: Vec<(usize, RunConfig)> =
        values.iter().filter(|&&v| v != reference).map(|&v| Ok((v, cfg.with_var(var, v)?))).collect::<Result<_>>()?;
    let t0 = Instant::now();
    let r = solve_probes(&rcfg)?;
    let reference_seconds = t0.elapsed().as_secs_f64();
    let mut entries = Vec::new();
    for (v, c) in configs {
        let t0 = Instant::now();
        let u = solve_probes(&c)?;
        let seconds = t0.elapsed().as_secs_f64();
        let e_rel = relative_error(&u, &r);
        tracing::info!(variable = var, value = v, e_rel, seconds, "sweep point");
        entries.push(SweepEntry { value: v, e_rel, seconds });
    }
    Ok(ConvergenceRecord { variable: var.into(), reference, reference_seconds, reference_config: rcfg, entries })
}

/// Total field at the probes on the artificial curve, without output cells
/// or far-field data.
pub fn solve_probes(cfg: &RunConfig) -> Result<Vec<C64>> {
    cfg.validate()?;
    let cell = cfg.cell()?;
    let q = ifb_quadrature(cfg.k, cfg.fb_nodes)?;
    let problem = PerturbedProblem::new(cell, &cfg.tbc_config(), &q, &[], false)?;
    let sol = problem.solve()?;
    let u = trig_interpolate(&sol.u1, &probe_parameters(PROBES));
    if u.iter().any(|z| !z.is_finite()) {
        return Err(Error::Singular("perturbed solve produced non-finite values".into()));
    }
    Ok(u)
}

/// Outcome of one self-test check.
#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

fn check(name: &str, value: f64, tolerance: f64) -> Check {
    Check { name: name.into(), value, tolerance, pass: value <= tolerance }
}

/// Quick structural checks at reduced resolution.
pub fn selftest() -> Result<Vec<Check>> {
    use crate::geometry::build_mesh;
    use crate::layer::{matvec, Boundary, LayerOps};
    let mut out = Vec::new();

    // single layer on the unit circle: eigenvalue i pi J0(k) H0(k)
    let k = 1.25;
    let mesh = build_mesh(&CurveShape::Disk { radius: 1.0, center: Point2::default() }, 128, 2)?;
    let ops = LayerOps::assemble(k, &Boundary::new(&[&mesh]))?;
    let b = crate::kernels::bessel01(k)?;
    let lambda = C64::new(0.0, PI) * b.j0 * C64::new(b.j0, b.y0);
    let ones = vec![C64::new(1.0, 0.0); mesh.len()];
    let sv = matvec(&ops.s, &ones);
    let e = sv.iter().map(|v| (v - lambda).norm()).fold(0.0, f64::max);
    out.push(check("circle single-layer eigenvalue", e, 1e-10));

    // no perturbation: the perturbed solver reproduces the background field
    let cfg = RunConfig {
        name: "selftest".into(),
        k,
        incidence: Incidence::Cylindrical { source: Point2::new(2.2, 0.0) },
        periodic: CurveShape::Disk { radius: 2.0, center: Point2::default() },
        perturbed: CurveShape::Disk { radius: 2.0, center: Point2::default() },
        artificial: default_artificial(),
        height: PI,
        m: 64,
        m_perturbed: None,
        n_rect: 240,
        n_artificial: 128,
        fb_nodes: 12,
        j_trunc: 30,
        p: 6,
        cells: [-1, 1],
        grid: [4, 4],
        threads: 1,
        output: OutputSpec::default(),
    };
    let r = solve(&cfg)?;
    let pts = [Point2::new(2.4, 2.2), Point2::new(2.0 * PI - 2.8, 0.4), Point2::new(-2.0 * PI + 0.3, -2.7)];
    let mut ev = FieldEvaluator::new(&r.problem, &r.solution);
    let u = ev.eval(&pts)?;
    let g = background_values(&r.problem, Source::Monopole(Point2::new(2.2, 0.0)), &pts)?;
    out.push(check("no-perturbation oracle", relative_error(&u, &g), 1e-5));
    let dir = r.solution.u2.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let scale = r.solution.u1.iter().map(|z| z.norm()).fold(0.0, f64::max);
    out.push(check("Dirichlet condition on the perturbed obstacle", dir / scale, 1e-6));
    Ok(out)
}

/// Background Green's function of one source at targets in the strip
/// `|x2| < H` of any cell, computed independently of the perturbed solver.
pub fn background_values(p: &PerturbedProblem, source: Source, targets: &[Point2]) -> Result<Vec<C64>> {
    use crate::floquet::background_green;
    use crate::layer::potential;
    let cells: Vec<i64> = targets.iter().map(|x| crate::propagate::cell_index(x.x)).collect();
    let g = background_green(&p.cell, &p.green.quadrature, &[source], &cells, false)?;
    targets
        .iter()
        .zip(&cells)
        .map(|(&x, &j)| {
            if j == 0 {
                return Ok(g.eval_cell0(&p.cell.boundary, &[x], None)?[(0, 0)]);
            }
            let (t, d) = g.cell(j)?;
            let b = p.cell.boundary.translated(Point2::new(2.0 * PI * j as f64, 0.0));
            let psi: Vec<C64> = (0..t.nrows()).map(|i| t[(i, 0)]).collect();
            let phi: Vec<C64> = (0..t.nrows()).map(|i| d[(i, 0)]).collect();
            potential(p.k, &b, &psi, &phi, x)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trig_interpolation_is_exact_for_band_limited_data() {
        let n = 16;
        let u: Vec<C64> = (0..n)
            .map(|j| {
                let t = 2.0 * PI * j as f64 / n as f64;
                C64::new((3.0 * t).cos(), (5.0 * t).sin()) + 0.5
            })
            .collect();
        let at = [0.1, 1.7, 4.0];
        let v = trig_interpolate(&u, &at);
        for (t, z) in at.iter().zip(v) {
            let e = C64::new((3.0 * t).cos(), (5.0 * t).sin()) + 0.5;
            assert!((z - e).norm() < 1e-13);
        }
        assert_eq!(trig_interpolate(&u, &[0.0])[0], trig_interpolate(&u, &[0.0])[0]);
    }

    #[test]
    fn grid_has_expected_size() {
        let cfg: RunConfig = serde_json::from_str(
            r#"{"k": 1.25, "incidence": {"type": "cylindrical", "source": [2.2, 0.0]},
                "periodic": {"shape": "disk", "radius": 2.0},
                "perturbed": {"shape": "drop", "shift": [0.0, -3.6]}}"#,
        )
        .unwrap();
        cfg.validate().unwrap();
        assert_eq!(grid_points(&cfg).len(), 12500);
    }

    #[test]
    fn validation_names_the_field() {
        let base = r#"{"k": 1.25, "incidence": {"type": "cylindrical", "source": [2.2, 0.0]},
            "periodic": {"shape": "disk", "radius": 2.0},
            "perturbed": {"shape": "drop", "shift": [0.0, -3.6]}"#;
        let field = |extra: &str| match RunConfig::from_json(&format!("{base}{extra}}}")) {
            Err(Error::Validation { field, .. }) => field,
            other => panic!("{:?}", other.map(|_| ())),
        };
        assert_eq!(field(r#", "H": 1.5"#), "H");
        assert_eq!(field(r#", "n": 7"#), "n");
        assert_eq!(field(r#", "N": 601"#), "N");
        assert_eq!(field(r#", "artificial": {"shape": "disk", "radius": 1.5}"#), "artificial");
        assert_eq!(field(r#", "threads": 0"#), "threads");
        assert!(RunConfig::from_json(&format!("{base}, \"bogus\": 1}}")).is_err());
    }
}
