//! Quadrature-only reference values for the closed-form kernels.
//!
//! Nothing in here calls into [`crate::kernels`]; the fBm covariance is
//! written out again inline so the two paths share no code.

use crate::quad::tanh_sinh;

/// Relative tolerance of each nested quadrature level.
pub const ORACLE_REL_TOL: f64 = 1e-13;

/// `E x_H(s) x_H(t)` for integrated fBm, by direct integration of the fBm
/// covariance over `[0,s] x [0,t]`.
pub fn ifbm_cov_by_quadrature(hurst: f64, s: f64, t: f64) -> f64 {
    ifbm_cov_by_quadrature_tol(hurst, s, t, ORACLE_REL_TOL)
}

/// The covariance `(|u|^p + |v|^p - |u-v|^p) / 2` splits into two one-dimensional
/// integrals and the double integral of `|u-v|^p`, whose inner integral is
/// evaluated from the exact distance to the diagonal.
pub fn ifbm_cov_by_quadrature_tol(hurst: f64, s: f64, t: f64, rel_tol: f64) -> f64 {
    if s == 0.0 || t == 0.0 {
        return 0.0;
    }
    let p = 2.0 * hurst;
    let pw = |x: f64| if x == 0.0 { 0.0 } else { x.abs().powf(p) };
    let one_d = |x: f64| tanh_sinh(|w, _, _| pw(w), 0.0, x, rel_tol).value;
    let (is, it) = (one_d(s), one_d(t));

    let (tlo, thi) = if t > 0.0 { (0.0, t) } else { (t, 0.0) };
    let inner = |u: f64| -> f64 {
        let total = if u > tlo && u < thi {
            tanh_sinh(|_, _, db| pw(db), tlo, u, rel_tol).value + tanh_sinh(|_, da, _| pw(da), u, thi, rel_tol).value
        } else {
            tanh_sinh(|v, _, _| pw(u - v), tlo, thi, rel_tol).value
        };
        t.signum() * total
    };
    let diag = if (0.0..=s).contains(&t) || (s..=0.0).contains(&t) {
        tanh_sinh(|u, _, _| inner(u), 0.0, t, rel_tol).value + tanh_sinh(|u, _, _| inner(u), t, s, rel_tol).value
    } else {
        tanh_sinh(|u, _, _| inner(u), 0.0, s, rel_tol).value
    };
    0.5 * (t * is + s * it - diag)
}

/// Normalized Lamperti-dual correlation `(2H+2) e^{-(1+H)t} E x_H(1) x_H(e^t)`
/// computed from the quadrature oracle.
pub fn dual_ifbm_by_quadrature(hurst: f64, t: f64) -> f64 {
    dual_ifbm_by_quadrature_tol(hurst, t, ORACLE_REL_TOL)
}

pub fn dual_ifbm_by_quadrature_tol(hurst: f64, t: f64, rel_tol: f64) -> f64 {
    let c = ifbm_cov_by_quadrature_tol(hurst, 1.0, t.exp(), rel_tol);
    (2.0 * hurst + 2.0) * (-(1.0 + hurst) * t).exp() * c
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brownian_values() {
        assert!((ifbm_cov_by_quadrature(0.5, 1.0, 1.0) - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(ifbm_cov_by_quadrature(0.3, 0.0, 2.0), 0.0);
    }

    #[test]
    fn unit_diagonal() {
        for &h in &[0.1, 0.37, 0.8] {
            let v = ifbm_cov_by_quadrature(h, 1.0, 1.0);
            assert!((v - 1.0 / (2.0 * h + 2.0)).abs() < 1e-11, "H={h}: {v}");
        }
    }
}
