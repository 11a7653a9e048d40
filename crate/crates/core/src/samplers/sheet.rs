//! Sheet sampling through the Kronecker structure of product covariances.

use super::{gram, CholeskySampler, Grid, Grid1D, Grid2D, PathEnsemble, PathSampler};
use crate::error::{Error, Result};
use crate::kernels::Family;
use crate::linalg::Cholesky;
use crate::rng::{fill_normal, TrialRng};
use crate::{Hurst, KernelSpec};

/// Largest full lattice `|grid_x| * |grid_y|` the Kronecker sampler builds.
pub const MAX_LATTICE: usize = 1 << 20;

/// `X = L_x Z L_y^T` on the lattice `grid_x x grid_y`, then restricted to `mask`.
///
/// Valid for any covariance of product form `K((x,y),(x',y')) = K_x(x,x') K_y(y,y')`,
/// since `chol(K_x (x) K_y) = chol(K_x) (x) chol(K_y)`.
#[derive(Debug, Clone)]
pub struct KronSheet {
    lx: Cholesky,
    ly: Cholesky,
    /// Row-major lattice indices `i * ny + j` kept in the output, in output order.
    mask: Vec<usize>,
}

impl KronSheet {
    /// Factor the per-coordinate covariances of a product kernel.
    ///
    /// `mask = None` keeps the whole lattice.
    pub fn new(kernel: &KernelSpec, gx: &Grid1D, gy: &Grid1D, mask: Option<Vec<usize>>) -> Result<Self> {
        let (nx, ny) = (gx.len(), gy.len());
        let total = nx.saturating_mul(ny);
        if total > MAX_LATTICE {
            return Err(Error::Budget { what: "kronecker lattice size", requested: total, limit: MAX_LATTICE });
        }
        let h = kernel.hurst().ok_or_else(|| Error::InvalidArgument("sheet kernels need H".into()))?;
        let factor = match kernel.family() {
            Family::Fbs => KernelSpec::fbm(h),
            Family::DualFbs => KernelSpec::dual_fbm(h),
            other => {
                return Err(Error::InvalidArgument(format!("{other} has no Kronecker factorization")));
            }
        };
        let lx = CholeskySampler::new(&factor, &Grid::OneD(gx.clone()))?.factor().clone();
        let ly = CholeskySampler::new(&factor, &Grid::OneD(gy.clone()))?.factor().clone();
        let mask = mask.unwrap_or_else(|| (0..total).collect());
        if let Some(&bad) = mask.iter().find(|&&m| m >= total) {
            return Err(Error::InvalidArgument(format!("mask index {bad} outside a {nx}x{ny} lattice")));
        }
        Ok(KronSheet { lx, ly, mask })
    }

    pub fn lattice_shape(&self) -> (usize, usize) {
        (self.lx.order(), self.ly.order())
    }

    pub fn mask(&self) -> &[usize] {
        &self.mask
    }

    /// Fill the whole `nx x ny` lattice (row-major).
    pub fn fill_lattice(&self, rng: &mut TrialRng, x: &mut [f64]) {
        let (nx, ny) = self.lattice_shape();
        let mut z = vec![0.0; nx * ny];
        fill_normal(rng, &mut z);
        // W = Z L_y^T, row by row
        let mut w = vec![0.0; nx * ny];
        for i in 0..nx {
            let zi = &z[i * ny..(i + 1) * ny];
            for j in 0..ny {
                let mut s = 0.0;
                for (k, zk) in zi.iter().enumerate().take(j + 1) {
                    s += zk * self.ly.get(j, k);
                }
                w[i * ny + j] = s;
            }
        }
        // X = L_x W
        x.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..nx {
            for k in 0..=i {
                let l = self.lx.get(i, k);
                if l == 0.0 {
                    continue;
                }
                let (xi, wk) = (i * ny, k * ny);
                for j in 0..ny {
                    x[xi + j] += l * w[wk + j];
                }
            }
        }
    }
}

impl PathSampler for KronSheet {
    fn n_points(&self) -> usize {
        self.mask.len()
    }

    fn method(&self) -> &'static str {
        "kronecker-cholesky"
    }

    fn fill(&self, rng: &mut TrialRng, out: &mut [f64]) {
        let (nx, ny) = self.lattice_shape();
        let mut x = vec![0.0; nx * ny];
        self.fill_lattice(rng, &mut x);
        for (o, &m) in out.iter_mut().zip(&self.mask) {
            *o = x[m];
        }
    }
}

/// Smallest positive spacing in either coordinate, the lattice step of the product grid.
fn lattice_step(gx: &Grid1D, gy: &Grid1D) -> f64 {
    gx.points().windows(2).chain(gy.points().windows(2)).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min).min(1.0)
}

/// The product grid as a [`Grid2D`], optionally restricted to `mask`.
pub fn product_grid(gx: &Grid1D, gy: &Grid1D, mask: Option<&[usize]>) -> Result<Grid2D> {
    let ny = gy.len();
    let all: Vec<usize> = (0..gx.len() * ny).collect();
    let idx = mask.unwrap_or(&all);
    let pts = idx.iter().map(|&m| [gx.points()[m / ny], gy.points()[m % ny]]).collect();
    Grid2D::new(lattice_step(gx, gy), pts)
}

/// Fractional Brownian sheet on the full lattice `grid_x x grid_y`.
pub fn fbs_sample_kron(h: Hurst, grid_x: &Grid1D, grid_y: &Grid1D, n_trials: usize, seed: u64) -> Result<PathEnsemble> {
    let kernel = KernelSpec::fbs(h);
    let s = KronSheet::new(&kernel, grid_x, grid_y, None)?;
    let grid = Grid::TwoD(product_grid(grid_x, grid_y, None)?);
    PathEnsemble::generate(&s, kernel, grid, n_trials, seed)
}

/// Dense Gram matrix of the sheet on a masked lattice (used to cross-check the factorization).
pub fn sheet_gram(kernel: &KernelSpec, gx: &Grid1D, gy: &Grid1D, mask: &[usize]) -> Result<Vec<f64>> {
    gram(kernel, &Grid::TwoD(product_grid(gx, gy, Some(mask))?))
}
