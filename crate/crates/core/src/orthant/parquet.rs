//! Small partitioned domains ("parquets") on which `P(whole) >= prod P(cell)`
//! can be checked with the orthant oracle.

use serde::Serialize;

use super::{supermult_check, OrthantQuery, SupermultReport, MAX_DIM};
use crate::error::{Error, Result};
use crate::samplers::{gram, Grid, Grid1D, Grid2D};
use crate::{Hurst, KernelSpec};

#[derive(Debug, Clone, Serialize)]
pub struct Parquet {
    pub name: String,
    pub kernel: KernelSpec,
    pub grid: Grid,
    /// Disjoint index sets covering the grid.
    pub cells: Vec<Vec<usize>>,
    pub threshold: f64,
}

impl Parquet {
    pub fn query(&self) -> Result<OrthantQuery> {
        let n = self.grid.len();
        if n > MAX_DIM {
            return Err(Error::Budget { what: "parquet size", requested: n, limit: MAX_DIM });
        }
        OrthantQuery::constant(gram(&self.kernel, &self.grid)?, n, self.threshold)
    }

    pub fn check(&self, n_qmc: usize, seed: u64) -> Result<SupermultReport> {
        supermult_check(&self.name, &self.query()?, &self.cells, n_qmc, seed)
    }
}

/// `n_cells` consecutive blocks of `per_cell` points `lo + k step`.
pub fn interval_parquet(
    name: &str,
    kernel: KernelSpec,
    lo: f64,
    step: f64,
    n_cells: usize,
    per_cell: usize,
    threshold: f64,
) -> Result<Parquet> {
    let n = n_cells * per_cell;
    let grid = Grid::OneD(Grid1D::stepped(lo, step, n)?);
    let cells = (0..n_cells).map(|c| (c * per_cell..(c + 1) * per_cell).collect()).collect();
    Ok(Parquet { name: name.to_string(), kernel, grid, cells, threshold })
}

/// The triangle `{t_1, t_2 > 0, t_1 + t_2 < side}` cut by its midlines into
/// `n^2` congruent triangles, three points per cell.
///
/// Upright cells carry the points `(1/3,1/3), (4/3,1/3), (1/3,4/3)` in units of
/// half a cell side; the inverted cells carry their 180-degree rotations, so
/// every cell holds a congruent copy of the same point pattern.
pub fn triangle_parquet(name: &str, kernel: KernelSpec, side: f64, n: usize, threshold: f64) -> Result<Parquet> {
    if n == 0 || 3 * n * n > MAX_DIM {
        return Err(Error::Budget { what: "triangle parquet points", requested: 3 * n * n, limit: MAX_DIM });
    }
    let s = side / n as f64;
    let d = s / 2.0;
    let pattern = [[1.0 / 3.0, 1.0 / 3.0], [4.0 / 3.0, 1.0 / 3.0], [1.0 / 3.0, 4.0 / 3.0]];
    let mut pts = Vec::new();
    let mut cells = Vec::new();
    for a in 0..n {
        for b in 0..n - a {
            let (x0, y0) = (a as f64 * s, b as f64 * s);
            cells.push((pts.len()..pts.len() + 3).collect());
            pts.extend(pattern.iter().map(|p| [x0 + p[0] * d, y0 + p[1] * d]));
            if a + b + 1 < n {
                let (x1, y1) = (x0 + s, y0 + s);
                cells.push((pts.len()..pts.len() + 3).collect());
                pts.extend(pattern.iter().map(|p| [x1 - p[0] * d, y1 - p[1] * d]));
            }
        }
    }
    let grid = Grid::TwoD(Grid2D::new(d / 3.0, pts)?);
    Ok(Parquet { name: name.to_string(), kernel, grid, cells, threshold })
}

/// The instances exercised by `verify prop1`.
pub fn bundled_parquets() -> Vec<Parquet> {
    let h = |v: f64| Hurst::new(v).expect("valid H");
    let sech = KernelSpec::sech(0.5).expect("positive scale");
    vec![
        interval_parquet("dual_fbm_h0.5_interval_3x4", KernelSpec::dual_fbm(h(0.5)), 0.0, 0.5, 3, 4, 0.0),
        interval_parquet("dual_fbm_h0.3_interval_4x3", KernelSpec::dual_fbm(h(0.3)), 0.0, 0.5, 4, 3, 0.0),
        interval_parquet("dual_ifbm_h0.7_interval_2x8", KernelSpec::dual_ifbm(h(0.7)), 0.0, 0.5, 2, 8, 0.0),
        interval_parquet("sech_interval_4x5", sech, 0.0, 0.5, 4, 5, 0.0),
        interval_parquet("fbm_h0.7_interval_2x6_level1", KernelSpec::fbm(h(0.7)), 1.0, 0.25, 2, 6, 1.0),
        interval_parquet("ifbm_h0.5_interval_3x4_level0.5", KernelSpec::ifbm(h(0.5)), 0.5, 0.25, 3, 4, 0.5),
        triangle_parquet("dual_fbs_h0.5_triangle_n2", KernelSpec::dual_fbs(h(0.5)), 2.0, 2, 0.0),
        triangle_parquet("dual_fbs_h0.3_triangle_n2", KernelSpec::dual_fbs(h(0.3)), 3.0, 2, 0.0),
    ]
    .into_iter()
    .map(|p| p.expect("bundled parquet parameters are valid"))
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangle_n2_has_twelve_points_in_four_cells() {
        let p = triangle_parquet("t", KernelSpec::dual_fbs(Hurst::new(0.5).unwrap()), 4.0, 2, 0.0).unwrap();
        assert_eq!(p.grid.len(), 12);
        assert_eq!(p.cells.len(), 4);
        let Grid::TwoD(g) = &p.grid else { panic!() };
        for q in g.points() {
            assert!(q[0] > 0.0 && q[1] > 0.0 && q[0] + q[1] < 4.0, "{q:?}");
        }
        // every cell is congruent: same sorted pairwise distances
        let dists = |c: &Vec<usize>| {
            let mut v: Vec<f64> = (0..3)
                .flat_map(|i| (i + 1..3).map(move |j| (i, j)))
                .map(|(i, j)| {
                    let (a, b) = (g.points()[c[i]], g.points()[c[j]]);
                    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
                })
                .collect();
            v.sort_by(f64::total_cmp);
            v
        };
        let d0 = dists(&p.cells[0]);
        for c in &p.cells {
            for (x, y) in dists(c).iter().zip(&d0) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn triangle_n1_is_single_cell() {
        let p = triangle_parquet("t", KernelSpec::dual_fbs(Hurst::new(0.5).unwrap()), 1.0, 1, 0.0).unwrap();
        assert_eq!((p.grid.len(), p.cells.len()), (3, 1));
        assert!(triangle_parquet("t", p.kernel, 1.0, 3, 0.0).is_err());
    }

    #[test]
    fn bundled_instances_are_valid() {
        let all = bundled_parquets();
        assert!(all.len() >= 6);
        assert!(all.iter().any(|p| p.grid.dim() == 2 && p.cells.len() == 4));
        for p in &all {
            assert!(p.grid.len() <= MAX_DIM);
            assert!(p.query().is_ok(), "{}", p.name);
        }
    }
}
