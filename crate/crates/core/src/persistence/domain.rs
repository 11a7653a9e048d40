//! Observation domains `T * Delta`, their discretizations and the `U_0` cuts.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::samplers::{Grid, Grid1D, Grid2D};

/// Relative slack for boundary membership tests on floating-point lattices.
const EPS: f64 = 1e-9;

/// Base shape `Delta`; the domain is `T * Delta` for `T = t_scale`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Shape {
    /// `T * [lo, hi]`.
    Interval { lo: f64, hi: f64 },
    /// `[0, T]^2`.
    Square,
    /// `K_a cap [0, T]^2` with `K_a = {a < s_1/s_2 < 1/a}`, plus the apex.
    Cone { a: f64 },
    /// `{t_1, t_2 > 0, t_1 + t_2 < 2T}`.
    Triangle,
    /// `{|t_1 - t_2| < |ln a|, t_i < dT, (t_1 >= cT or t_2 >= cT)}`.
    Band { c: f64, d: f64, a: f64 },
}

/// Largest interval discretization.
pub const MAX_INTERVAL_STEPS: usize = 1 << 22;
/// Largest per-axis lattice of a sheet domain.
pub const MAX_AXIS_POINTS: usize = 1 << 12;

/// The neighbourhood `U_0` of the zero-variance set, in absolute coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Exclude {
    /// Closed interval `[lo, hi]`.
    Interval { lo: f64, hi: f64 },
    /// `[0, 1]^2`.
    UnitSquare,
    /// `{s : s_1 s_2 < 1}`.
    ProductBelowOne,
    /// `{s : |s| < r}`.
    Ball { r: f64 },
}

impl Exclude {
    pub fn contains_1d(&self, s: f64) -> bool {
        match *self {
            Exclude::Interval { lo, hi } => s >= lo && s <= hi,
            Exclude::Ball { r } => s.abs() < r,
            _ => false,
        }
    }

    pub fn contains_2d(&self, s: [f64; 2]) -> bool {
        match *self {
            Exclude::UnitSquare => s[0] <= 1.0 && s[1] <= 1.0 && s[0] >= 0.0 && s[1] >= 0.0,
            Exclude::ProductBelowOne => s[0] * s[1] < 1.0,
            Exclude::Ball { r } => s[0].hypot(s[1]) < r,
            Exclude::Interval { .. } => false,
        }
    }

    pub fn contains(&self, p: Point) -> bool {
        match p {
            Point::One(s) => self.contains_1d(s),
            Point::Two(s) => self.contains_2d(s),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Point {
    One(f64),
    Two([f64; 2]),
}

/// A discretized domain.
///
/// `n_grid` means, by shape:
/// * `Interval`: number of uniform steps across `T * [lo, hi]`;
/// * `Square`, `Cone`: points per doubling of `s` on each axis (log lattice
///   `2^{j/n_grid}` restricted to `[1/T, T]`, plus the axis value 0), so a
///   ratio-2 ladder adds the same number of points per step;
/// * `Triangle`, `Band`: points per unit length (lattice `(i + 1/2)/n_grid`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub shape: Shape,
    pub t_scale: f64,
    pub n_grid: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exclude: Option<Exclude>,
}

impl fmt::Display for DomainSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let t = self.t_scale;
        match self.shape {
            Shape::Interval { lo, hi } => write!(f, "[{}, {}]", lo * t, hi * t)?,
            Shape::Square => write!(f, "[0, {t}]^2")?,
            Shape::Cone { a } => write!(f, "cone(a={a}) in [0, {t}]^2")?,
            Shape::Triangle => write!(f, "triangle(t1+t2<{})", 2.0 * t)?,
            Shape::Band { c, d, a } => write!(f, "band(c={}, d={}, a={a})", c * t, d * t)?,
        }
        write!(f, " n_grid={}", self.n_grid)?;
        if let Some(u) = self.exclude {
            write!(f, " minus {u:?}")?;
        }
        Ok(())
    }
}

impl DomainSpec {
    pub fn new(shape: Shape, t_scale: f64, n_grid: usize, exclude: Option<Exclude>) -> Result<Self> {
        let d = DomainSpec { shape, t_scale, n_grid, exclude };
        d.validate()?;
        Ok(d)
    }

    pub fn interval(lo: f64, hi: f64, t_scale: f64, n_grid: usize) -> Result<Self> {
        DomainSpec::new(Shape::Interval { lo, hi }, t_scale, n_grid, None)
    }

    pub fn with_exclude(mut self, u0: Exclude) -> Self {
        self.exclude = Some(u0);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if !(self.t_scale > 0.0 && self.t_scale.is_finite()) {
            return bad(format!("T must be positive, got {}", self.t_scale));
        }
        if self.n_grid == 0 {
            return bad("n_grid must be >= 1".into());
        }
        match self.shape {
            Shape::Interval { lo, hi } if !(lo < hi && lo.is_finite() && hi.is_finite()) => {
                bad(format!("interval needs lo < hi, got [{lo}, {hi}]"))
            }
            Shape::Cone { a } if !(a > 0.0 && a <= 1.0) => bad(format!("cone needs 0 < a <= 1, got {a}")),
            Shape::Band { c, d, a } if !(c >= 0.0 && c < d && a > 0.0 && a < 1.0) => {
                bad(format!("band needs 0 <= c < d and 0 < a < 1, got c={c} d={d} a={a}"))
            }
            _ => Ok(()),
        }
    }

    pub fn dim(&self) -> usize {
        match self.shape {
            Shape::Interval { .. } => 1,
            _ => 2,
        }
    }

    /// Uniform step of an interval grid.
    pub fn step(&self) -> Option<f64> {
        match self.shape {
            Shape::Interval { lo, hi } => Some(self.t_scale * (hi - lo) / self.n_grid as f64),
            Shape::Triangle | Shape::Band { .. } => Some(1.0 / self.n_grid as f64),
            _ => None,
        }
    }

    /// Whether `p` is one of this domain's grid points' locations (membership
    /// in the discretized region, with a small boundary slack).
    pub fn contains(&self, p: Point) -> bool {
        let t = self.t_scale;
        match (self.shape, p) {
            (Shape::Interval { lo, hi }, Point::One(s)) => {
                let step = self.step().unwrap_or(1.0);
                let slack = EPS * step;
                s >= lo * t - slack && s <= hi * t + slack && near_integer((s - lo * t) / step)
            }
            (Shape::Square, Point::Two(s)) => s.iter().all(|&x| on_log_axis(x, t, self.n_grid)),
            (Shape::Cone { a }, Point::Two(s)) => {
                if s == [0.0, 0.0] {
                    return true;
                }
                s.iter().all(|&x| x > 0.0 && on_log_axis(x, t, self.n_grid))
                    && s[0] > a * s[1] * (1.0 + EPS)
                    && s[0] * a < s[1] * (1.0 - EPS)
            }
            (Shape::Triangle, Point::Two(s)) => on_mid_lattice(s, self.n_grid) && s[0] + s[1] < 2.0 * t * (1.0 - EPS),
            (Shape::Band { c, d, a }, Point::Two(s)) => {
                let w = a.ln().abs();
                on_mid_lattice(s, self.n_grid)
                    && (s[0] - s[1]).abs() < w * (1.0 - EPS)
                    && s[0] < d * t * (1.0 - EPS)
                    && s[1] < d * t * (1.0 - EPS)
                    && (s[0] >= c * t * (1.0 - EPS) || s[1] >= c * t * (1.0 - EPS))
            }
            _ => false,
        }
    }

    /// Per-axis coordinates of the lattice the 2D shapes are cut from.
    pub fn axis_grid(&self) -> Result<Grid1D> {
        let t = self.t_scale;
        let rho = self.n_grid as f64;
        let approx = match self.shape {
            Shape::Square | Shape::Cone { .. } => 2.0 * t.log2().abs() * rho + 2.0,
            Shape::Triangle => 2.0 * t * rho,
            Shape::Band { d, .. } => d * t * rho,
            Shape::Interval { .. } => 0.0,
        };
        if approx > MAX_AXIS_POINTS as f64 {
            return Err(Error::Budget {
                what: "lattice points per axis",
                requested: approx as usize,
                limit: MAX_AXIS_POINTS,
            });
        }
        let pts: Vec<f64> = match self.shape {
            Shape::Interval { .. } => return Err(Error::InvalidArgument("intervals have no axis grid".into())),
            Shape::Square | Shape::Cone { .. } => {
                let jmax = (t.log2() * rho + 1e-6).floor() as i64;
                std::iter::once(0.0).chain((-jmax..=jmax).map(|j| (j as f64 / rho).exp2())).collect()
            }
            Shape::Triangle => {
                let n = (2.0 * t * rho).ceil() as usize;
                (0..n).map(|i| (i as f64 + 0.5) / rho).filter(|&x| x < 2.0 * t).collect()
            }
            Shape::Band { d, .. } => {
                let n = (d * t * rho).ceil() as usize;
                (0..n).map(|i| (i as f64 + 0.5) / rho).filter(|&x| x < d * t).collect()
            }
        };
        Grid1D::new(pts)
    }

    /// The discretized domain.
    pub fn grid(&self) -> Result<Grid> {
        self.validate()?;
        match self.shape {
            Shape::Interval { lo, .. } => {
                if self.n_grid > MAX_INTERVAL_STEPS {
                    return Err(Error::Budget {
                        what: "interval steps",
                        requested: self.n_grid,
                        limit: MAX_INTERVAL_STEPS,
                    });
                }
                let step = self.step().expect("interval");
                let lo = lo * self.t_scale;
                Ok(Grid::OneD(Grid1D::new((0..=self.n_grid).map(|i| lo + step * i as f64).collect())?))
            }
            _ => {
                let ax = self.axis_grid()?;
                let mut pts = Vec::new();
                for &x in ax.points() {
                    for &y in ax.points() {
                        if self.contains(Point::Two([x, y])) {
                            pts.push([x, y]);
                        }
                    }
                }
                if pts.is_empty() {
                    return Err(Error::InvalidArgument(format!("domain {self} has no grid points")));
                }
                let step = ax.points().windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min).min(1.0);
                Ok(Grid::TwoD(Grid2D::new(step, pts)?))
            }
        }
    }

    pub fn in_u0(&self, p: Point) -> bool {
        self.exclude.is_some_and(|u| u.contains(p))
    }
}

fn near_integer(x: f64) -> bool {
    (x - x.round()).abs() < 1e-6
}

/// `x` is 0 or a point `2^{j/rho}` of the log lattice inside `[1/T, T]`.
fn on_log_axis(x: f64, t: f64, rho: usize) -> bool {
    x == 0.0 || (x >= (1.0 / t) * (1.0 - EPS) && x <= t * (1.0 + EPS) && near_integer(x.log2() * rho as f64))
}

/// Both coordinates on `(i + 1/2)/rho`, `i >= 0`.
fn on_mid_lattice(s: [f64; 2], rho: usize) -> bool {
    s.iter().all(|&x| x > 0.0 && near_integer(x * rho as f64 - 0.5))
}

pub(crate) fn grid_point(grid: &Grid, i: usize) -> Point {
    match grid {
        Grid::OneD(g) => Point::One(g.points()[i]),
        Grid::TwoD(g) => Point::Two(g.points()[i]),
    }
}
