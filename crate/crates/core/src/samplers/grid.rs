use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Strictly increasing, finite sample times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Grid1D {
    points: Vec<f64>,
}

impl Grid1D {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidArgument("a grid needs at least one point".into()));
        }
        if points.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidArgument("grid points must be finite".into()));
        }
        if let Some(w) = points.windows(2).find(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidArgument(format!(
                "grid must be strictly increasing, found {} then {}",
                w[0], w[1]
            )));
        }
        Ok(Grid1D { points })
    }

    /// `n` equally spaced points from `lo` to `hi` inclusive (`n = 1` gives `{lo}`).
    pub fn uniform(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("n must be >= 1".into()));
        }
        if n == 1 {
            return Grid1D::new(vec![lo]);
        }
        let step = (hi - lo) / (n - 1) as f64;
        Grid1D::new((0..n).map(|i| lo + step * i as f64).collect())
    }

    /// `lo + k * step` for `k = 0..n`.
    pub fn stepped(lo: f64, step: f64, n: usize) -> Result<Self> {
        Grid1D::new((0..n).map(|k| lo + step * k as f64).collect())
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Common spacing when the grid is uniform to relative precision `1e-9`.
    pub fn uniform_step(&self) -> Option<f64> {
        if self.points.len() < 2 {
            return None;
        }
        let p = &self.points;
        let step = (p[p.len() - 1] - p[0]) / (p.len() - 1) as f64;
        let ok = p.windows(2).all(|w| ((w[1] - w[0]) - step).abs() <= 1e-9 * step.abs().max(p[0].abs()));
        ok.then_some(step)
    }
}

impl TryFrom<Vec<f64>> for Grid1D {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Grid1D::new(v)
    }
}

impl From<Grid1D> for Vec<f64> {
    fn from(g: Grid1D) -> Self {
        g.points
    }
}

/// Points of a lattice with spacing `lattice_step`, restricted to a domain mask.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGrid2D", into = "RawGrid2D")]
pub struct Grid2D {
    lattice_step: f64,
    points: Vec<[f64; 2]>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid2D {
    lattice_step: f64,
    points: Vec<[f64; 2]>,
}

impl Grid2D {
    pub fn new(lattice_step: f64, points: Vec<[f64; 2]>) -> Result<Self> {
        if !(lattice_step > 0.0 && lattice_step.is_finite()) {
            return Err(Error::InvalidArgument(format!("lattice step must be positive, got {lattice_step}")));
        }
        if points.is_empty() {
            return Err(Error::InvalidArgument("a grid needs at least one point".into()));
        }
        if points.iter().flatten().any(|p| !p.is_finite()) {
            return Err(Error::InvalidArgument("grid points must be finite".into()));
        }
        let mut sorted = points.clone();
        sorted.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidArgument("grid points must be distinct".into()));
        }
        Ok(Grid2D { lattice_step, points })
    }

    pub fn lattice_step(&self) -> f64 {
        self.lattice_step
    }

    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

impl TryFrom<RawGrid2D> for Grid2D {
    type Error = Error;
    fn try_from(r: RawGrid2D) -> Result<Self> {
        Grid2D::new(r.lattice_step, r.points)
    }
}

impl From<Grid2D> for RawGrid2D {
    fn from(g: Grid2D) -> Self {
        RawGrid2D { lattice_step: g.lattice_step, points: g.points }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Grid {
    OneD(Grid1D),
    TwoD(Grid2D),
}

impl Grid {
    pub fn len(&self) -> usize {
        match self {
            Grid::OneD(g) => g.len(),
            Grid::TwoD(g) => g.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        match self {
            Grid::OneD(_) => 1,
            Grid::TwoD(_) => 2,
        }
    }
}

impl From<Grid1D> for Grid {
    fn from(g: Grid1D) -> Self {
        Grid::OneD(g)
    }
}

impl From<Grid2D> for Grid {
    fn from(g: Grid2D) -> Self {
        Grid::TwoD(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_grids() {
        assert!(Grid1D::new(vec![]).is_err());
        assert!(Grid1D::new(vec![1.0, 1.0]).is_err());
        assert!(Grid1D::new(vec![2.0, 1.0]).is_err());
        assert!(Grid1D::new(vec![f64::NAN]).is_err());
        assert!(Grid2D::new(0.1, vec![[0.0, 1.0], [0.0, 1.0]]).is_err());
        assert!(Grid2D::new(0.0, vec![[0.0, 1.0]]).is_err());
    }

    #[test]
    fn uniform_grids() {
        let g = Grid1D::uniform(0.0, 1.0, 5).unwrap();
        assert_eq!(g.points(), &[0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(g.uniform_step(), Some(0.25));
        assert_eq!(Grid1D::new(vec![0.0, 1.0, 3.0]).unwrap().uniform_step(), None);
    }

    #[test]
    fn serde_validates() {
        let g: Grid = serde_json::from_str(r#"{"one_d":[0.5,1.0]}"#).unwrap();
        assert_eq!(g.len(), 2);
        assert!(serde_json::from_str::<Grid>(r#"{"one_d":[1.0,0.5]}"#).is_err());
        let g2 = Grid::TwoD(Grid2D::new(0.5, vec![[0.5, 0.5], [1.0, 0.5]]).unwrap());
        let back: Grid = serde_json::from_str(&serde_json::to_string(&g2).unwrap()).unwrap();
        assert_eq!(back, g2);
    }
}
