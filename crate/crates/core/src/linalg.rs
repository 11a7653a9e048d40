//! Dense symmetric factorizations used by the exact samplers.

use crate::error::{Error, Result};

/// Largest matrix order the dense factorization accepts.
pub const MAX_DENSE: usize = 8192;

const JITTER_REL: f64 = 1e-12;
const JITTER_GROWTH: f64 = 10.0;
const MAX_ESCALATIONS: usize = 4;

/// Lower-triangular factor `L` with `L L^T = A + jitter I` (row-major, full storage).
///
/// Rows whose diagonal is exactly zero are deterministic zeros of the field
/// (points on the axes for the sheet); they get a zero row in `L` and no jitter.
#[derive(Debug, Clone)]
pub struct Cholesky {
    n: usize,
    l: Vec<f64>,
    jitter: f64,
    escalations: usize,
}

impl Cholesky {
    /// Factor a symmetric positive semidefinite matrix given in full row-major storage.
    ///
    /// Tries the plain factorization first, then adds `1e-12 * max diag` to the
    /// diagonal, growing it tenfold up to four times.
    pub fn factor(a: &[f64], n: usize) -> Result<Self> {
        if n > MAX_DENSE {
            return Err(Error::Budget { what: "dense factorization order", requested: n, limit: MAX_DENSE });
        }
        if a.len() != n * n {
            return Err(Error::InvalidArgument(format!("matrix storage has {} entries, expected {}", a.len(), n * n)));
        }
        let max_diag = (0..n).map(|i| a[i * n + i]).fold(0.0_f64, f64::max);
        if max_diag == 0.0 {
            return Ok(Cholesky { n, l: vec![0.0; n * n], jitter: 0.0, escalations: 0 });
        }
        let mut jitter = 0.0;
        let mut last_fail = (0, 0.0);
        for escalation in 0..=MAX_ESCALATIONS {
            if escalation > 0 {
                jitter = JITTER_REL * max_diag * JITTER_GROWTH.powi(escalation as i32 - 1);
            }
            match try_factor(a, n, jitter) {
                Ok(l) => {
                    if escalation > 0 {
                        log::warn!("cholesky of order {n} needed {escalation} jitter escalation(s), jitter {jitter:e}");
                    }
                    return Ok(Cholesky { n, l, jitter, escalations: escalation });
                }
                Err(fail) => last_fail = fail,
            }
        }
        Err(Error::NotPositiveSemidefinite { pivot: last_fail.0, value: last_fail.1, escalations: MAX_ESCALATIONS })
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn escalations(&self) -> usize {
        self.escalations
    }

    /// Entry `L[i][j]`.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.l[i * self.n + j]
    }

    /// `out = L z`.
    pub fn mul_into(&self, z: &[f64], out: &mut [f64]) {
        let n = self.n;
        for (i, o) in out.iter_mut().enumerate().take(n) {
            let row = &self.l[i * n..i * n + i + 1];
            *o = row.iter().zip(z).map(|(a, b)| a * b).sum();
        }
    }
}

fn try_factor(a: &[f64], n: usize, jitter: f64) -> std::result::Result<Vec<f64>, (usize, f64)> {
    let mut l = vec![0.0; n * n];
    for j in 0..n {
        let ajj = a[j * n + j];
        if ajj == 0.0 {
            continue;
        }
        let (done, rest) = l.split_at_mut((j + 1) * n);
        let row_j = &mut done[j * n..];
        let d = ajj + jitter - row_j[..j].iter().map(|x| x * x).sum::<f64>();
        if !(d > 0.0) {
            return Err((j, d));
        }
        let djj = d.sqrt();
        row_j[j] = djj;
        let lj = &row_j[..j];
        for (r, row_i) in rest.chunks_exact_mut(n).enumerate() {
            let i = j + 1 + r;
            let s: f64 = row_i[..j].iter().zip(lj).map(|(x, y)| x * y).sum();
            row_i[j] = (a[i * n + j] - s) / djj;
        }
    }
    Ok(l)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reconstruct(c: &Cholesky) -> Vec<f64> {
        let n = c.order();
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                out[i * n + j] = (0..n).map(|k| c.get(i, k) * c.get(j, k)).sum();
            }
        }
        out
    }

    #[test]
    fn factors_spd() {
        let a = [4.0, 2.0, 0.6, 2.0, 2.0, 0.5, 0.6, 0.5, 3.0];
        let c = Cholesky::factor(&a, 3).unwrap();
        assert_eq!(c.escalations(), 0);
        for (x, y) in reconstruct(&c).iter().zip(&a) {
            assert!((x - y).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_rows_pass_through() {
        let a = [0.0, 0.0, 0.0, 0.0, 2.0, 1.0, 0.0, 1.0, 2.0];
        let c = Cholesky::factor(&a, 3).unwrap();
        assert_eq!(c.jitter(), 0.0);
        assert!((0..3).all(|k| c.get(0, k) == 0.0));
    }

    #[test]
    fn rank_deficient_needs_jitter() {
        // rank one: x x^T with x = (1, 2, 3)
        let x = [1.0, 2.0, 3.0];
        let a: Vec<f64> = (0..9).map(|k| x[k / 3] * x[k % 3]).collect();
        let c = Cholesky::factor(&a, 3).unwrap();
        assert!(c.escalations() >= 1);
        for (u, v) in reconstruct(&c).iter().zip(&a) {
            assert!((u - v).abs() < 1e-6);
        }
    }

    #[test]
    fn indefinite_rejected() {
        let a = [1.0, 2.0, 2.0, 1.0];
        assert!(matches!(Cholesky::factor(&a, 2), Err(Error::NotPositiveSemidefinite { .. })));
    }

    #[test]
    fn mul_into_is_lower_product() {
        let a = [4.0, 2.0, 2.0, 5.0];
        let c = Cholesky::factor(&a, 2).unwrap();
        let mut out = [0.0; 2];
        c.mul_into(&[1.0, 1.0], &mut out);
        assert!((out[0] - 2.0).abs() < 1e-15 && (out[1] - 3.0).abs() < 1e-15);
    }
}
