//! Multivariate normal orthant probabilities `P(X < b)` for small dimensions.
//!
//! One and two dimensions are evaluated in closed form (the bivariate case
//! through Plackett's one-dimensional integral). From three dimensions on the
//! Genz separation-of-variables transform is integrated with randomly shifted
//! rank-1 lattice rules.

mod parquet;

use rand::Rng;
use serde::Serialize;

pub use parquet::{bundled_parquets, interval_parquet, triangle_parquet, Parquet};

use crate::error::{Error, Result};
use crate::normal;
use crate::quad::tanh_sinh;
use crate::rng::trial_rng;

pub const MAX_DIM: usize = 25;
/// Independent random shifts per estimate.
pub const RANDOMIZATIONS: usize = 16;

const PRIMES: [u32; 25] =
    [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97];

/// Covariance (full row-major) and componentwise upper thresholds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrthantQuery {
    n: usize,
    cov: Vec<f64>,
    thresholds: Vec<f64>,
}

impl OrthantQuery {
    pub fn new(cov: Vec<f64>, thresholds: Vec<f64>) -> Result<Self> {
        let n = thresholds.len();
        if n == 0 || n > MAX_DIM {
            return Err(Error::Budget { what: "orthant dimension", requested: n, limit: MAX_DIM });
        }
        if cov.len() != n * n {
            return Err(Error::InvalidArgument(format!("covariance has {} entries, expected {}", cov.len(), n * n)));
        }
        for i in 0..n {
            if !(cov[i * n + i] > 0.0) {
                return Err(Error::InvalidArgument(format!("diagonal entry {i} is not positive")));
            }
            for j in 0..i {
                if (cov[i * n + j] - cov[j * n + i]).abs() > 1e-12 {
                    return Err(Error::InvalidArgument(format!("covariance not symmetric at ({i},{j})")));
                }
            }
        }
        if thresholds.iter().any(|b| b.is_nan()) {
            return Err(Error::InvalidArgument("thresholds must not be NaN".into()));
        }
        Ok(OrthantQuery { n, cov, thresholds })
    }

    /// Same threshold `b` in every coordinate.
    pub fn constant(cov: Vec<f64>, n: usize, b: f64) -> Result<Self> {
        OrthantQuery::new(cov, vec![b; n])
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn cov(&self, i: usize, j: usize) -> f64 {
        self.cov[i * self.n + j]
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    /// Sub-query on the coordinates `idx`.
    pub fn restrict(&self, idx: &[usize]) -> Result<Self> {
        let cov = idx.iter().flat_map(|&i| idx.iter().map(move |&j| (i, j))).map(|(i, j)| self.cov(i, j)).collect();
        OrthantQuery::new(cov, idx.iter().map(|&i| self.thresholds[i]).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OrthantResult {
    pub estimate: f64,
    /// Three standard errors of the mean over the random shifts (quadrature
    /// error estimate in one and two dimensions).
    pub err: f64,
}

/// `P(X_i < b_i for all i)`.
pub fn orthant_prob(q: &OrthantQuery, n_qmc: usize, seed: u64) -> Result<OrthantResult> {
    match q.n {
        1 => Ok(OrthantResult { estimate: normal::cdf(q.thresholds[0] / q.cov(0, 0).sqrt()), err: 0.0 }),
        2 => Ok(bivariate(q)),
        _ => orthant_prob_qmc(q, n_qmc, seed),
    }
}

/// Quadrant probability with correlation `r` and zero thresholds.
pub fn quadrant_prob(r: f64) -> f64 {
    0.25 + r.clamp(-1.0, 1.0).asin() / (2.0 * std::f64::consts::PI)
}

fn bivariate(q: &OrthantQuery) -> OrthantResult {
    let (s1, s2) = (q.cov(0, 0).sqrt(), q.cov(1, 1).sqrt());
    let r = (q.cov(0, 1) / (s1 * s2)).clamp(-1.0, 1.0);
    let (h, k) = (q.thresholds[0] / s1, q.thresholds[1] / s2);
    if h == 0.0 && k == 0.0 {
        return OrthantResult { estimate: quadrant_prob(r), err: 0.0 };
    }
    // Plackett: dP/dr = phi_2(h, k; r)
    let base = normal::cdf(h) * normal::cdf(k);
    if r == 0.0 || !h.is_finite() || !k.is_finite() {
        return OrthantResult { estimate: base, err: 0.0 };
    }
    let dens = |rho: f64| {
        let om = (1.0 - rho * rho).max(0.0);
        if om == 0.0 {
            return 0.0;
        }
        (-(h * h - 2.0 * rho * h * k + k * k) / (2.0 * om)).exp() / (2.0 * std::f64::consts::PI * om.sqrt())
    };
    let res = tanh_sinh(|x, _, _| dens(x), 0.0, r, 1e-13);
    OrthantResult { estimate: (base + res.value).clamp(0.0, 1.0), err: res.error.abs() }
}

/// Cholesky factor with Genz-Bretz variable prioritization; returns the
/// permuted thresholds alongside.
fn ordered_factor(q: &OrthantQuery) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = q.n;
    let mut c = q.cov.clone();
    let mut b = q.thresholds.clone();
    let mut l = vec![0.0; n * n];
    let mut y = vec![0.0; n];
    let scale = (0..n).map(|i| c[i * n + i]).fold(0.0, f64::max);
    for i in 0..n {
        let mut best = (i, f64::INFINITY);
        for j in i..n {
            let s: f64 = (0..i).map(|k| l[j * n + k] * y[k]).sum();
            let v = c[j * n + j] - (0..i).map(|k| l[j * n + k].powi(2)).sum::<f64>();
            let p = if v > 1e-14 * scale { normal::cdf((b[j] - s) / v.sqrt()) } else { 1.0 };
            if p < best.1 {
                best = (j, p);
            }
        }
        let j = best.0;
        if j != i {
            for k in 0..n {
                c.swap(i * n + k, j * n + k);
            }
            for k in 0..n {
                c.swap(k * n + i, k * n + j);
            }
            b.swap(i, j);
            for k in 0..i {
                l.swap(i * n + k, j * n + k);
            }
        }
        let v = c[i * n + i] - (0..i).map(|k| l[i * n + k].powi(2)).sum::<f64>();
        if v < -1e-10 * scale {
            return Err(Error::NotPositiveSemidefinite { pivot: i, value: v, escalations: 0 });
        }
        let lii = if v > 1e-14 * scale { v.sqrt() } else { 0.0 };
        l[i * n + i] = lii;
        for r in i + 1..n {
            let s: f64 = (0..i).map(|k| l[r * n + k] * l[i * n + k]).sum();
            l[r * n + i] = if lii > 0.0 { (c[r * n + i] - s) / lii } else { 0.0 };
        }
        if lii > 0.0 {
            let s: f64 = (0..i).map(|k| l[i * n + k] * y[k]).sum();
            let ub = (b[i] - s) / lii;
            let cdf = normal::cdf(ub);
            y[i] = if cdf > 0.0 { -normal::pdf(ub) / cdf } else { ub };
        }
    }
    Ok((l, b))
}

/// Separation-of-variables integrand at `w in [0,1)^{n-1}`.
fn sov_integrand(l: &[f64], b: &[f64], n: usize, w: &[f64], y: &mut [f64]) -> f64 {
    let mut f = 1.0;
    for i in 0..n {
        let s: f64 = (0..i).map(|k| l[i * n + k] * y[k]).sum();
        let lii = l[i * n + i];
        let e = if lii > 0.0 {
            normal::cdf((b[i] - s) / lii)
        } else if b[i] - s >= 0.0 {
            1.0
        } else {
            0.0
        };
        f *= e;
        if f == 0.0 {
            return 0.0;
        }
        if i + 1 < n {
            let u = (w[i] * e).clamp(1e-300, 1.0 - 1e-16);
            y[i] = if lii > 0.0 { normal::ppf(u) } else { 0.0 };
        }
    }
    f
}

/// Randomized-QMC estimate in any dimension (no closed-form shortcut).
///
/// `n_qmc` lattice points are split evenly over 16 random shifts; each point
/// is paired with its antithetic reflection.
pub fn orthant_prob_qmc(q: &OrthantQuery, n_qmc: usize, seed: u64) -> Result<OrthantResult> {
    let n = q.n;
    let (l, b) = ordered_factor(q)?;
    let per = (n_qmc / RANDOMIZATIONS / 2).max(8);
    let gen: Vec<f64> = PRIMES[..n.max(2) - 1].iter().map(|&p| f64::from(p).sqrt().fract()).collect();
    let mut means = Vec::with_capacity(RANDOMIZATIONS);
    let mut w = vec![0.0; n];
    let mut wa = vec![0.0; n];
    let mut y = vec![0.0; n];
    for r in 0..RANDOMIZATIONS {
        let mut rng = trial_rng(seed, r as u64);
        let shift: Vec<f64> = (0..n - 1).map(|_| rng.random::<f64>()).collect();
        let mut acc = 0.0;
        for k in 1..=per {
            for d in 0..n - 1 {
                let x = (k as f64 * gen[d] + shift[d]).fract();
                // baker's transform keeps the periodized integrand continuous
                let t = 1.0 - (2.0 * x - 1.0).abs();
                w[d] = t;
                wa[d] = 1.0 - t;
            }
            acc += 0.5 * (sov_integrand(&l, &b, n, &w, &mut y) + sov_integrand(&l, &b, n, &wa, &mut y));
        }
        means.push(acc / per as f64);
    }
    let m = means.iter().sum::<f64>() / RANDOMIZATIONS as f64;
    let var = means.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (RANDOMIZATIONS - 1) as f64;
    Ok(OrthantResult { estimate: m.clamp(0.0, 1.0), err: 3.0 * (var / RANDOMIZATIONS as f64).sqrt() })
}

#[derive(Debug, Clone, Serialize)]
pub struct SlepianReport {
    /// `false` when the preconditions fail; the comparison then says nothing.
    pub applicable: bool,
    pub reason: Option<String>,
    pub p_a: f64,
    pub err_a: f64,
    pub p_b: f64,
    pub err_b: f64,
    pub passed: bool,
}

/// Check `P_A(X < b) <= P_B(X < b)` when `A` and `B` share the diagonal and
/// `A <= B` entrywise off the diagonal.
pub fn slepian_check(
    cov_a: &[f64],
    cov_b: &[f64],
    thresholds: &[f64],
    n_qmc: usize,
    seed: u64,
) -> Result<SlepianReport> {
    let n = thresholds.len();
    let qa = OrthantQuery::new(cov_a.to_vec(), thresholds.to_vec())?;
    let qb = OrthantQuery::new(cov_b.to_vec(), thresholds.to_vec())?;
    let mut reason = None;
    'outer: for i in 0..n {
        if (qa.cov(i, i) - qb.cov(i, i)).abs() > 1e-12 {
            reason = Some(format!("diagonals differ at {i}"));
            break;
        }
        for j in 0..n {
            if i != j && qa.cov(i, j) > qb.cov(i, j) + 1e-15 {
                reason = Some(format!("A exceeds B at ({i},{j})"));
                break 'outer;
            }
        }
    }
    if let Some(r) = reason {
        return Ok(SlepianReport {
            applicable: false,
            reason: Some(r),
            p_a: f64::NAN,
            err_a: f64::NAN,
            p_b: f64::NAN,
            err_b: f64::NAN,
            passed: false,
        });
    }
    let a = orthant_prob(&qa, n_qmc, seed)?;
    let b = orthant_prob(&qb, n_qmc, seed.wrapping_add(1))?;
    Ok(SlepianReport {
        applicable: true,
        reason: None,
        p_a: a.estimate,
        err_a: a.err,
        p_b: b.estimate,
        err_b: b.err,
        passed: a.estimate <= b.estimate + 3.0 * (a.err + b.err),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SupermultReport {
    pub name: String,
    pub n_points: usize,
    pub n_cells: usize,
    pub whole: f64,
    pub whole_err: f64,
    pub cells: Vec<OrthantResult>,
    pub product: f64,
    /// First-order propagation of the cell errors through the product.
    pub product_err: f64,
    pub min_cov: f64,
    pub hypothesis_ok: bool,
    /// `-ln P(whole)` and `sum_i -ln P(cell_i)`.
    pub neg_log_whole: f64,
    pub neg_log_cells: f64,
    pub passed: bool,
}

/// `P(whole) >= prod_i P(cell_i)` for a partition of the coordinates of `q`.
///
/// Requires nonnegative covariances everywhere (reported through
/// `hypothesis_ok`; the inequality is still evaluated).
pub fn supermult_check(
    name: &str,
    q: &OrthantQuery,
    partition: &[Vec<usize>],
    n_qmc: usize,
    seed: u64,
) -> Result<SupermultReport> {
    let n = q.dim();
    let mut seen = vec![false; n];
    for &i in partition.iter().flatten() {
        if i >= n || seen[i] {
            return Err(Error::InvalidArgument(format!("partition cells overlap or leave the grid at index {i}")));
        }
        seen[i] = true;
    }
    if seen.iter().any(|s| !s) {
        return Err(Error::InvalidArgument("partition does not cover the grid".into()));
    }
    let min_cov = (0..n * n).map(|k| q.cov(k / n, k % n)).fold(f64::INFINITY, f64::min);
    let whole = orthant_prob(q, n_qmc, seed)?;
    let mut cells = Vec::with_capacity(partition.len());
    for (c, idx) in partition.iter().enumerate() {
        cells.push(orthant_prob(&q.restrict(idx)?, n_qmc, seed.wrapping_add(1 + c as u64))?);
    }
    let product: f64 = cells.iter().map(|c| c.estimate).product();
    let rel: f64 = cells.iter().map(|c| if c.estimate > 0.0 { (c.err / c.estimate).powi(2) } else { 0.0 }).sum();
    let product_err = product * rel.sqrt();
    let neg_log_cells = cells.iter().map(|c| -c.estimate.ln()).sum();
    Ok(SupermultReport {
        name: name.to_string(),
        n_points: n,
        n_cells: partition.len(),
        whole: whole.estimate,
        whole_err: whole.err,
        product,
        product_err,
        min_cov,
        hypothesis_ok: min_cov >= 0.0,
        neg_log_whole: -whole.estimate.ln(),
        neg_log_cells,
        passed: whole.estimate >= product - 3.0 * (whole.err + product_err),
        cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identity(n: usize) -> Vec<f64> {
        (0..n * n).map(|k| if k / n == k % n { 1.0 } else { 0.0 }).collect()
    }

    fn equicorr(n: usize, r: f64) -> Vec<f64> {
        (0..n * n).map(|k| if k / n == k % n { 1.0 } else { r }).collect()
    }

    #[test]
    fn independent_octant() {
        let q = OrthantQuery::constant(identity(3), 3, 0.0).unwrap();
        let r = orthant_prob(&q, 1 << 14, 1).unwrap();
        assert!((r.estimate - 0.125).abs() < 1e-12 + 3.0 * r.err, "{r:?}");
    }

    #[test]
    fn univariate_cdf() {
        let q = OrthantQuery::new(vec![1.0], vec![1.0]).unwrap();
        assert!((orthant_prob(&q, 0, 0).unwrap().estimate - 0.841344746068543).abs() < 1e-12);
        let q = OrthantQuery::new(vec![4.0], vec![2.0]).unwrap();
        assert!((orthant_prob(&q, 0, 0).unwrap().estimate - 0.841344746068543).abs() < 1e-12);
    }

    #[test]
    fn equicorrelated_half_has_closed_form() {
        // P(all < 0) for equicorrelation 1/2 is 1/(n+1)
        for n in [3, 5, 8] {
            let q = OrthantQuery::constant(equicorr(n, 0.5), n, 0.0).unwrap();
            let r = orthant_prob(&q, 1 << 14, 2).unwrap();
            let exact = 1.0 / (n as f64 + 1.0);
            assert!((r.estimate - exact).abs() <= 3.0 * r.err + 1e-4, "n={n}: {r:?}");
            assert!(r.err < 1e-3);
        }
    }

    #[test]
    fn bivariate_closed_form_vs_qmc() {
        let mut rng = trial_rng(99, 0);
        for _ in 0..50 {
            let r: f64 = rng.random_range(-0.95..0.95);
            let b: [f64; 2] = [rng.random_range(-1.0..1.5), rng.random_range(-1.0..1.5)];
            let q = OrthantQuery::new(vec![1.0, r, r, 1.0], b.to_vec()).unwrap();
            let closed = orthant_prob(&q, 0, 0).unwrap();
            let qmc = orthant_prob_qmc(&q, 1 << 12, 5).unwrap();
            assert!(
                (closed.estimate - qmc.estimate).abs() <= 3.0 * qmc.err + 1e-9,
                "r={r} b={b:?}: {closed:?} {qmc:?}"
            );
            let q0 = OrthantQuery::new(vec![1.0, r, r, 1.0], vec![0.0, 0.0]).unwrap();
            let z = orthant_prob_qmc(&q0, 1 << 12, 6).unwrap();
            assert!((quadrant_prob(r) - z.estimate).abs() <= 3.0 * z.err + 1e-9);
        }
    }

    #[test]
    fn plackett_matches_quadrant_formula_at_zero() {
        for r in [-0.7, 0.0, 0.3, 0.99] {
            let q = OrthantQuery::new(vec![1.0, r, r, 1.0], vec![1e-300, 0.0]).unwrap();
            assert!((orthant_prob(&q, 0, 0).unwrap().estimate - quadrant_prob(r)).abs() < 1e-12);
        }
    }

    #[test]
    fn monotone_in_thresholds() {
        let cov = equicorr(4, 0.3);
        let lo = orthant_prob(&OrthantQuery::constant(cov.clone(), 4, 0.0).unwrap(), 1 << 14, 3).unwrap();
        let mut b = vec![0.0; 4];
        b[2] = 0.5;
        let hi = orthant_prob(&OrthantQuery::new(cov, b).unwrap(), 1 << 14, 3).unwrap();
        assert!(hi.estimate > lo.estimate - 3.0 * (hi.err + lo.err));
        assert!(hi.estimate > lo.estimate);
    }

    #[test]
    fn rejects_bad_queries() {
        assert!(OrthantQuery::new(vec![1.0, 0.5, 0.4, 1.0], vec![0.0, 0.0]).is_err());
        assert!(OrthantQuery::new(vec![0.0], vec![0.0]).is_err());
        assert!(matches!(OrthantQuery::constant(identity(26), 26, 0.0), Err(Error::Budget { .. })));
        let q = OrthantQuery::constant(equicorr(3, -0.9), 3, 0.0).unwrap();
        assert!(matches!(orthant_prob(&q, 1 << 10, 0), Err(Error::NotPositiveSemidefinite { .. })));
    }

    #[test]
    fn slepian_orderings() {
        let a = equicorr(4, 0.2);
        let b = equicorr(4, 0.6);
        let rep = slepian_check(&a, &b, &[0.0; 4], 1 << 14, 4).unwrap();
        assert!(rep.applicable && rep.passed && rep.p_a < rep.p_b, "{rep:?}");
        let same = slepian_check(&a, &a, &[0.3; 4], 1 << 14, 4).unwrap();
        assert!((same.p_a - same.p_b).abs() <= 3.0 * (same.err_a + same.err_b));
        let rev = slepian_check(&b, &a, &[0.0; 4], 1 << 14, 4).unwrap();
        assert!(!rev.applicable);
        // two dimensions: quadrant probability increases with r
        assert!(quadrant_prob(0.1) < quadrant_prob(0.2));
    }

    #[test]
    fn block_diagonal_is_multiplicative() {
        let n = 6;
        let mut cov = identity(n);
        for (i, j) in [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)] {
            cov[i * n + j] = 0.5;
            cov[j * n + i] = 0.5;
        }
        let q = OrthantQuery::constant(cov, n, 0.0).unwrap();
        let rep = supermult_check("blocks", &q, &[vec![0, 1, 2], vec![3, 4, 5]], 1 << 14, 7).unwrap();
        assert!(rep.passed);
        assert!((rep.whole - 1.0 / 16.0).abs() <= 3.0 * (rep.whole_err + rep.product_err) + 1e-4, "{rep:?}");
        assert!((rep.product - 1.0 / 16.0).abs() < 1e-3);
    }

    #[test]
    fn partition_must_cover() {
        let q = OrthantQuery::constant(identity(3), 3, 0.0).unwrap();
        assert!(supermult_check("x", &q, &[vec![0, 1]], 64, 0).is_err());
        assert!(supermult_check("x", &q, &[vec![0, 1], vec![1, 2]], 64, 0).is_err());
    }
}
