//! Exact joint Gaussian sampling on discretized domains.
//!
//! A [`PathSampler`] holds whatever was factored once (a Cholesky factor, a
//! circulant spectrum, a pair of Kronecker factors) and produces one path per
//! call from a per-trial random stream. Ensembles are folds of that over trials.

mod circulant;
mod grid;
mod io;
mod sheet;

use rayon::prelude::*;
use serde::Serialize;

pub use circulant::{
    circulant_min_eigen, fbm_path_sampler, fgn_acov, fgn_circulant, ifbm_paths, FbmPath, IfbmMethod, IfbmPath,
    StationaryCirculant,
};
pub use grid::{Grid, Grid1D, Grid2D};
pub use io::EnsembleSidecar;
pub use sheet::{fbs_sample_kron, product_grid, sheet_gram, KronSheet, MAX_LATTICE};

use crate::error::{Error, Result};
use crate::linalg::{Cholesky, MAX_DENSE};
use crate::rng::{fill_normal, trial_rng, TrialRng, GENERATOR_ID};
use crate::KernelSpec;

/// Upper bound on `n_trials * n_points` for a materialized ensemble (8 GiB of f64 would be 2^30).
pub const MAX_ENSEMBLE_VALUES: usize = 1 << 28;

/// One path per call, drawn from the caller's stream.
pub trait PathSampler: Send + Sync {
    fn n_points(&self) -> usize;

    /// Short method tag recorded in `generator_id`.
    fn method(&self) -> &'static str;

    fn fill(&self, rng: &mut TrialRng, out: &mut [f64]);

    /// Feed path values in grid order to `visit` until it returns `false`.
    ///
    /// The default materializes the whole path first; samplers that can
    /// generate values sequentially override this to stop early.
    fn walk(&self, rng: &mut TrialRng, buf: &mut Vec<f64>, visit: &mut dyn FnMut(usize, f64) -> bool) {
        buf.resize(self.n_points(), 0.0);
        self.fill(rng, buf);
        for (i, &v) in buf.iter().enumerate() {
            if !visit(i, v) {
                break;
            }
        }
    }
}

/// Dense Cholesky sampler for an arbitrary Gram matrix.
#[derive(Debug, Clone)]
pub struct CholeskySampler {
    chol: Cholesky,
}

impl CholeskySampler {
    pub fn new(kernel: &KernelSpec, grid: &Grid) -> Result<Self> {
        let n = grid.len();
        if n > MAX_DENSE {
            return Err(Error::Budget { what: "cholesky grid size", requested: n, limit: MAX_DENSE });
        }
        let k = gram(kernel, grid)?;
        Ok(CholeskySampler { chol: Cholesky::factor(&k, n)? })
    }

    pub fn from_gram(k: &[f64], n: usize) -> Result<Self> {
        Ok(CholeskySampler { chol: Cholesky::factor(k, n)? })
    }

    pub fn factor(&self) -> &Cholesky {
        &self.chol
    }
}

impl PathSampler for CholeskySampler {
    fn n_points(&self) -> usize {
        self.chol.order()
    }

    fn method(&self) -> &'static str {
        "cholesky"
    }

    fn fill(&self, rng: &mut TrialRng, out: &mut [f64]) {
        let mut z = vec![0.0; self.chol.order()];
        fill_normal(rng, &mut z);
        self.chol.mul_into(&z, out);
    }
}

/// Gram matrix of `kernel` on `grid`, full row-major storage.
pub fn gram(kernel: &KernelSpec, grid: &Grid) -> Result<Vec<f64>> {
    let n = grid.len();
    let mut k = vec![0.0; n * n];
    match grid {
        Grid::OneD(g) => {
            let p = g.points();
            for i in 0..n {
                for j in 0..=i {
                    let v = kernel.cov_1d(p[i], p[j])?;
                    k[i * n + j] = v;
                    k[j * n + i] = v;
                }
            }
        }
        Grid::TwoD(g) => {
            let p = g.points();
            for i in 0..n {
                for j in 0..=i {
                    let v = kernel.cov_2d(p[i], p[j])?;
                    k[i * n + j] = v;
                    k[j * n + i] = v;
                }
            }
        }
    }
    Ok(k)
}

/// Jointly sampled paths, row-major `n_trials x n_points`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathEnsemble {
    pub kernel: KernelSpec,
    pub grid: Grid,
    pub n_trials: usize,
    #[serde(skip)]
    pub values: Vec<f64>,
    pub seed: u64,
    pub generator_id: String,
}

impl PathEnsemble {
    /// Run `sampler` for trials `0..n_trials`, trial `k` on stream `k` of `seed`.
    pub fn generate(
        sampler: &dyn PathSampler,
        kernel: KernelSpec,
        grid: Grid,
        n_trials: usize,
        seed: u64,
    ) -> Result<Self> {
        let n = sampler.n_points();
        if n != grid.len() {
            return Err(Error::InvalidArgument(format!("sampler produces {n} points but the grid has {}", grid.len())));
        }
        if n_trials == 0 {
            return Err(Error::InvalidArgument("n_trials must be >= 1".into()));
        }
        let total = n_trials.saturating_mul(n);
        if total > MAX_ENSEMBLE_VALUES {
            return Err(Error::Budget { what: "ensemble values", requested: total, limit: MAX_ENSEMBLE_VALUES });
        }
        let mut values = vec![0.0; total];
        values.par_chunks_mut(n).enumerate().for_each(|(k, row)| {
            let mut rng = trial_rng(seed, k as u64);
            sampler.fill(&mut rng, row);
        });
        let ens = PathEnsemble {
            kernel,
            grid,
            n_trials,
            values,
            seed,
            generator_id: format!("{GENERATOR_ID}/{}", sampler.method()),
        };
        ens.check_finite()?;
        Ok(ens)
    }

    pub fn n_points(&self) -> usize {
        self.grid.len()
    }

    pub fn row(&self, trial: usize) -> &[f64] {
        let n = self.n_points();
        &self.values[trial * n..(trial + 1) * n]
    }

    pub fn get(&self, trial: usize, point: usize) -> f64 {
        self.values[trial * self.n_points() + point]
    }

    fn check_finite(&self) -> Result<()> {
        match self.values.iter().position(|v| !v.is_finite()) {
            None => Ok(()),
            Some(k) => Err(Error::Format(format!(
                "non-finite value at trial {}, point {}",
                k / self.n_points(),
                k % self.n_points()
            ))),
        }
    }
}

/// Exact samples of `kernel` on `grid` by dense Cholesky.
pub fn chol_sample(kernel: &KernelSpec, grid: &Grid, n_trials: usize, seed: u64) -> Result<PathEnsemble> {
    let sampler = CholeskySampler::new(kernel, grid)?;
    PathEnsemble::generate(&sampler, *kernel, grid.clone(), n_trials, seed)
}

#[derive(Debug, Clone, Serialize)]
pub struct CovReport {
    pub n_trials: usize,
    pub n_points: usize,
    pub max_abs_dev: f64,
    /// `|S_ij - K_ij| / sqrt((K_ii K_jj + K_ij^2) / n)` at the worst entry.
    pub worst_z: f64,
    pub worst_entry: (usize, usize),
    pub passed: bool,
}

pub const COV_Z_LIMIT: f64 = 4.0;

/// Compare the empirical second moments of a centered ensemble with the Gram matrix.
pub fn empirical_cov_report(ens: &PathEnsemble) -> Result<CovReport> {
    let idx: Vec<usize> = (0..ens.n_points()).collect();
    empirical_cov_report_on(ens, &idx)
}

/// [`empirical_cov_report`] restricted to a subset of grid points.
pub fn empirical_cov_report_on(ens: &PathEnsemble, idx: &[usize]) -> Result<CovReport> {
    if ens.n_trials < 100 {
        return Err(Error::InvalidArgument("empirical_cov_report needs n_trials >= 100".into()));
    }
    let m = idx.len();
    let sub = match &ens.grid {
        Grid::OneD(g) => Grid::OneD(Grid1D::new(idx.iter().map(|&i| g.points()[i]).collect())?),
        Grid::TwoD(g) => Grid::TwoD(Grid2D::new(g.lattice_step(), idx.iter().map(|&i| g.points()[i]).collect())?),
    };
    let kmat = gram(&ens.kernel, &sub)?;
    let k = |a: usize, b: usize| kmat[a * m + b];
    let mut s = vec![0.0; m * m];
    for t in 0..ens.n_trials {
        let row = ens.row(t);
        for a in 0..m {
            let xa = row[idx[a]];
            for b in 0..=a {
                s[a * m + b] += xa * row[idx[b]];
            }
        }
    }
    let n = ens.n_trials as f64;
    let mut max_abs_dev: f64 = 0.0;
    let mut worst_z: f64 = 0.0;
    let mut worst_entry = (0, 0);
    for a in 0..m {
        for b in 0..=a {
            let emp = s[a * m + b] / n;
            let kab = k(a, b);
            let dev = (emp - kab).abs();
            max_abs_dev = max_abs_dev.max(dev);
            let var = (k(a, a) * k(b, b) + kab * kab) / n;
            let z = if var > 0.0 {
                dev / var.sqrt()
            } else if dev <= 1e-9 {
                0.0
            } else {
                f64::INFINITY
            };
            if z > worst_z || (z.is_nan() && !worst_z.is_nan()) {
                worst_z = z;
                worst_entry = (idx[a], idx[b]);
            }
        }
    }
    Ok(CovReport {
        n_trials: ens.n_trials,
        n_points: m,
        max_abs_dev,
        worst_z,
        worst_entry,
        passed: worst_z <= COV_Z_LIMIT,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Hurst;

    fn h(v: f64) -> Hurst {
        Hurst::new(v).unwrap()
    }

    #[test]
    fn brownian_unit_variance() {
        let g = Grid::OneD(Grid1D::new(vec![1.0]).unwrap());
        let ens = chol_sample(&KernelSpec::fbm(h(0.5)), &g, 200_000, 1).unwrap();
        let var = ens.values.iter().map(|x| x * x).sum::<f64>() / 200_000.0;
        assert!((var - 1.0).abs() < 5e-3 * 2.0, "{var}");
    }

    #[test]
    fn sheet_axis_column_is_zero() {
        let g = Grid::TwoD(Grid2D::new(0.5, vec![[1.0, 0.0], [1.0, 1.0], [0.5, 1.5]]).unwrap());
        let ens = chol_sample(&KernelSpec::fbs(h(0.3)), &g, 1000, 2).unwrap();
        assert!((0..1000).all(|t| ens.get(t, 0).abs() < 1e-5));
        let rep = empirical_cov_report(&ens).unwrap();
        assert!(rep.passed, "{rep:?}");
    }

    #[test]
    fn dual_ifbm_pair_correlation() {
        let g = Grid::OneD(Grid1D::new(vec![0.0, 1.0]).unwrap());
        let kern = KernelSpec::dual_ifbm(h(0.5));
        let n = 100_000;
        let ens = chol_sample(&kern, &g, n, 3).unwrap();
        let r = (0..n).map(|t| ens.get(t, 0) * ens.get(t, 1)).sum::<f64>() / n as f64;
        let b = crate::kernels::dual_ifbm_corr(h(0.5), 1.0);
        assert!((r - b).abs() < 3.0 * ((1.0 + b * b) / n as f64).sqrt(), "{r} vs {b}");
    }

    #[test]
    fn deterministic_and_thread_independent() {
        let g = Grid::OneD(Grid1D::uniform(0.1, 2.0, 20).unwrap());
        let kern = KernelSpec::fbm(h(0.7));
        let a = chol_sample(&kern, &g, 64, 9).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let b = pool.install(|| chol_sample(&kern, &g, 64, 9).unwrap());
        assert_eq!(a.values, b.values);
        let c = chol_sample(&kern, &g, 64, 10).unwrap();
        assert_ne!(a.values, c.values);
    }

    #[test]
    fn cov_report_negative_control() {
        let g = Grid::OneD(Grid1D::uniform(0.5, 2.0, 4).unwrap());
        let mut ens = chol_sample(&KernelSpec::fbm(h(0.4)), &g, 500, 4).unwrap();
        ens.values.iter_mut().for_each(|v| *v = 0.0);
        let rep = empirical_cov_report(&ens).unwrap();
        assert!(!rep.passed && rep.worst_z > 10.0);
        ens.n_trials = 50;
        ens.values.truncate(200);
        assert!(empirical_cov_report(&ens).is_err());
    }

    #[test]
    fn budget_errors() {
        let g = Grid::OneD(Grid1D::uniform(1.0, 2.0, MAX_DENSE + 1).unwrap());
        assert!(matches!(chol_sample(&KernelSpec::fbm(h(0.5)), &g, 1, 0), Err(Error::Budget { .. })));
        assert!(chol_sample(&KernelSpec::fbs(h(0.5)), &g, 1, 0).is_err());
    }
}
