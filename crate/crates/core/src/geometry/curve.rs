use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::Point2;
use crate::error::{Error, Result};

/// A closed parametrized curve `s -> X(s)`, `s in [0, period)`.
pub trait ParamCurve {
    fn period(&self) -> f64;
    /// `(X(s), X'(s), X''(s))`.
    fn eval(&self, s: f64) -> (Point2, Point2, Point2);
    /// Parameter values of corners, ascending in `[0, period)`.
    fn corners(&self) -> Vec<f64>;
}

/// Built-in curve families.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum CurveShape {
    Disk {
        radius: f64,
        #[serde(default)]
        center: Point2,
    },
    Ellipse {
        semi_axes: [f64; 2],
        #[serde(default)]
        center: Point2,
    },
    /// `(1.8 sin s, 3.6 sin(s/2) + 1.8) + shift`, with a corner at `s = 0`.
    Drop {
        #[serde(default)]
        shift: Point2,
    },
    Square {
        side: f64,
        #[serde(default)]
        center: Point2,
    },
    Rectangle {
        width: f64,
        height: f64,
        #[serde(default)]
        center: Point2,
    },
    /// Closed polygon through the vertices, counter-clockwise or clockwise.
    Polygon { vertices: Vec<Point2> },
    /// Star-shaped radial Fourier curve
    /// `r(s) = a_0 + sum_m (a_m cos ms + b_m sin ms)`.
    Fourier {
        #[serde(default)]
        center: Point2,
        cos: Vec<f64>,
        #[serde(default)]
        sin: Vec<f64>,
    },
}

impl CurveShape {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Parameter(m));
        let finite = |p: Point2| p.x.is_finite() && p.y.is_finite();
        match self {
            CurveShape::Disk { radius, center } => {
                if !(*radius > 0.0) || !finite(*center) {
                    return bad(format!("disk radius must be positive, got {radius}"));
                }
            }
            CurveShape::Ellipse { semi_axes, center } => {
                if !(semi_axes[0] > 0.0 && semi_axes[1] > 0.0) || !finite(*center) {
                    return bad(format!("ellipse semi-axes must be positive, got {semi_axes:?}"));
                }
            }
            CurveShape::Drop { shift } => {
                if !finite(*shift) {
                    return bad("drop shift must be finite".into());
                }
            }
            CurveShape::Square { side, center } => {
                if !(*side > 0.0) || !finite(*center) {
                    return bad(format!("square side must be positive, got {side}"));
                }
            }
            CurveShape::Rectangle { width, height, center } => {
                if !(*width > 0.0 && *height > 0.0) || !finite(*center) {
                    return bad(format!("rectangle sides must be positive, got {width} x {height}"));
                }
            }
            CurveShape::Polygon { vertices } => {
                if vertices.len() < 3 {
                    return bad("polygon needs at least three vertices".into());
                }
                let n = vertices.len();
                for i in 0..n {
                    if !finite(vertices[i]) || (vertices[(i + 1) % n] - vertices[i]).norm() == 0.0 {
                        return bad("polygon vertices must be finite and distinct".into());
                    }
                }
            }
            CurveShape::Fourier { center, cos, sin } => {
                if cos.is_empty() || !finite(*center) {
                    return bad("Fourier curve needs a mean radius".into());
                }
                let f = FourierCurve { center: *center, cos: cos.clone(), sin: sin.clone() };
                let m = 2048;
                for i in 0..m {
                    let s = 2.0 * PI * i as f64 / m as f64;
                    if f.radius(s).0 <= 0.0 {
                        return bad("Fourier radius must stay positive".into());
                    }
                }
            }
        }
        Ok(())
    }

    /// Boxed evaluator for this shape.
    pub fn curve(&self) -> Result<Box<dyn ParamCurve + Send + Sync>> {
        self.validate()?;
        Ok(match self {
            CurveShape::Disk { radius, center } => Box::new(Ellipse { center: *center, a: *radius, b: *radius }),
            CurveShape::Ellipse { semi_axes, center } => {
                Box::new(Ellipse { center: *center, a: semi_axes[0], b: semi_axes[1] })
            }
            CurveShape::Drop { shift } => Box::new(Drop { shift: *shift }),
            CurveShape::Square { side, center } => Box::new(Polygon::axis_box(*center, *side, *side)),
            CurveShape::Rectangle { width, height, center } => {
                Box::new(Polygon::axis_box(*center, *width, *height))
            }
            CurveShape::Polygon { vertices } => Box::new(Polygon::new(vertices.clone())),
            CurveShape::Fourier { center, cos, sin } => {
                Box::new(FourierCurve { center: *center, cos: cos.clone(), sin: sin.clone() })
            }
        })
    }

    /// Dense point sampling, used for inside tests and extents.
    pub fn sample(&self, m: usize) -> Result<Vec<Point2>> {
        let c = self.curve()?;
        let t = c.period();
        Ok((0..m).map(|i| c.eval(t * i as f64 / m as f64).0).collect())
    }

    /// Winding-number test against a dense polygonal sampling.
    pub fn contains(&self, p: Point2) -> Result<bool> {
        Ok(polygon_contains(&self.sample(4096)?, p))
    }
}

/// Even-odd test of `p` against a closed polygon.
pub fn polygon_contains(poly: &[Point2], p: Point2) -> bool {
    let n = poly.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (poly[i], poly[j]);
        if (a.y > p.y) != (b.y > p.y) && p.x < (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x {
            inside = !inside;
        }
        j = i;
    }
    inside
}

struct Ellipse {
    center: Point2,
    a: f64,
    b: f64,
}

impl ParamCurve for Ellipse {
    fn period(&self) -> f64 {
        2.0 * PI
    }
    fn eval(&self, s: f64) -> (Point2, Point2, Point2) {
        let (sn, cs) = s.sin_cos();
        (
            self.center + Point2::new(self.a * cs, self.b * sn),
            Point2::new(-self.a * sn, self.b * cs),
            Point2::new(-self.a * cs, -self.b * sn),
        )
    }
    fn corners(&self) -> Vec<f64> {
        Vec::new()
    }
}

struct Drop {
    shift: Point2,
}

impl ParamCurve for Drop {
    fn period(&self) -> f64 {
        2.0 * PI
    }
    fn eval(&self, s: f64) -> (Point2, Point2, Point2) {
        let (sn, cs) = s.sin_cos();
        let (sh, ch) = (0.5 * s).sin_cos();
        (
            self.shift + Point2::new(1.8 * sn, 3.6 * sh + 1.8),
            Point2::new(1.8 * cs, 1.8 * ch),
            Point2::new(-1.8 * sn, -0.9 * sh),
        )
    }
    fn corners(&self) -> Vec<f64> {
        vec![0.0]
    }
}

struct Polygon {
    vertices: Vec<Point2>,
    /// Cumulative arclength at each vertex.
    cum: Vec<f64>,
}

impl Polygon {
    fn new(vertices: Vec<Point2>) -> Polygon {
        let n = vertices.len();
        let mut cum = Vec::with_capacity(n + 1);
        cum.push(0.0);
        for i in 0..n {
            let l = (vertices[(i + 1) % n] - vertices[i]).norm();
            cum.push(cum[i] + l);
        }
        Polygon { vertices, cum }
    }

    /// Axis-aligned box, counter-clockwise from the lower-left corner.
    fn axis_box(c: Point2, w: f64, h: f64) -> Polygon {
        let (a, b) = (0.5 * w, 0.5 * h);
        Polygon::new(vec![
            c + Point2::new(-a, -b),
            c + Point2::new(a, -b),
            c + Point2::new(a, b),
            c + Point2::new(-a, b),
        ])
    }
}

impl ParamCurve for Polygon {
    fn period(&self) -> f64 {
        *self.cum.last().unwrap()
    }
    fn eval(&self, s: f64) -> (Point2, Point2, Point2) {
        let n = self.vertices.len();
        let s = s.rem_euclid(self.period());
        let mut i = self.cum.partition_point(|&c| c <= s).saturating_sub(1);
        if i >= n {
            i = n - 1;
        }
        let a = self.vertices[i];
        let b = self.vertices[(i + 1) % n];
        let len = self.cum[i + 1] - self.cum[i];
        let dir = (b - a) * (1.0 / len);
        let u = s - self.cum[i];
        // endpoint-exact interpolation
        let w = u / len;
        let p = Point2::new(a.x + (b.x - a.x) * w, a.y + (b.y - a.y) * w);
        (p, dir, Point2::new(0.0, 0.0))
    }
    fn corners(&self) -> Vec<f64> {
        self.cum[..self.vertices.len()].to_vec()
    }
}

struct FourierCurve {
    center: Point2,
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl FourierCurve {
    fn radius(&self, s: f64) -> (f64, f64, f64) {
        let mut r = self.cos[0];
        let (mut r1, mut r2) = (0.0, 0.0);
        for (m, a) in self.cos.iter().enumerate().skip(1) {
            let mf = m as f64;
            let (sn, cs) = (mf * s).sin_cos();
            r += a * cs;
            r1 -= a * mf * sn;
            r2 -= a * mf * mf * cs;
        }
        for (i, b) in self.sin.iter().enumerate() {
            let mf = (i + 1) as f64;
            let (sn, cs) = (mf * s).sin_cos();
            r += b * sn;
            r1 += b * mf * cs;
            r2 -= b * mf * mf * sn;
        }
        (r, r1, r2)
    }
}

impl ParamCurve for FourierCurve {
    fn period(&self) -> f64 {
        2.0 * PI
    }
    fn eval(&self, s: f64) -> (Point2, Point2, Point2) {
        let (r, r1, r2) = self.radius(s);
        let (sn, cs) = s.sin_cos();
        (
            self.center + Point2::new(r * cs, r * sn),
            Point2::new(r1 * cs - r * sn, r1 * sn + r * cs),
            Point2::new(r2 * cs - 2.0 * r1 * sn - r * cs, r2 * sn + 2.0 * r1 * cs - r * sn),
        )
    }
    fn corners(&self) -> Vec<f64> {
        Vec::new()
    }
}
