//! Numeric checks on the dual integrated-fBm correlation `B_H`: positivity of
//! the derivative polynomial `R`, monotone decay, and the `1/cosh` envelope.

use serde::Serialize;

use super::{dual_ifbm_corr, Hurst};
use crate::error::{Error, Result};
use crate::scalar::{acosh_clamped, pow_abs, Scalar};

/// `R(x) = 1 - 2Hx - (1-x)^{2H}(1-x^2) + 2H x^{2H+1} - x^{2+2H}` on `[0, 1]`.
///
/// `B_H'(t) = -(1+H)/(2+4H) e^{(1+H)t} R(e^{-t})`, so `R >= 0` is the
/// monotonicity certificate.
pub fn r_poly<T: Scalar>(h: Hurst<T>, x: T) -> Result<T> {
    if !(x >= T::zero() && x <= T::one()) {
        return Err(Error::InvalidArgument(format!("r_poly needs x in [0,1], got {x}")));
    }
    let one = T::one();
    let p = h.twice();
    Ok(one - p * x - pow_abs(one - x, p) * (one - x * x) + p * pow_abs(x, p + one) - pow_abs(x, p + T::two()))
}

#[derive(Debug, Clone, Serialize)]
pub struct RNonnegReport {
    pub hurst: f64,
    pub gridsize: usize,
    pub min_value: f64,
    pub argmin: f64,
    pub passed: bool,
}

/// Sweep `R` over a uniform grid of `[0,1]`; passes when `min R >= -1e-12`.
pub fn verify_r_nonneg<T: Scalar>(h: Hurst<T>, gridsize: usize) -> Result<RNonnegReport> {
    if gridsize < 2 {
        return Err(Error::InvalidArgument("gridsize must be >= 2".into()));
    }
    let last = T::from_usize(gridsize - 1).unwrap();
    let mut min_value = f64::INFINITY;
    let mut argmin = 0.0;
    for i in 0..gridsize {
        let x = T::from_usize(i).unwrap() / last;
        let r = r_poly(h, x)?.to_f64().unwrap();
        if r < min_value {
            min_value = r;
            argmin = x.to_f64().unwrap();
        }
    }
    Ok(RNonnegReport { hurst: h.value().to_f64().unwrap(), gridsize, min_value, argmin, passed: min_value >= -1e-12 })
}

#[derive(Debug, Clone, Serialize)]
pub struct MonotoneReport {
    pub hurst: f64,
    pub tmax: f64,
    pub gridsize: usize,
    pub start_value: f64,
    pub max_increase: f64,
    /// Grid times `t_i` with `B(t_i) - B(t_{i-1}) > 1e-12`.
    pub violations: Vec<f64>,
    pub passed: bool,
}

/// Check that `B_H` is nonincreasing on `gridsize + 1` equally spaced points of `[0, tmax]`.
pub fn verify_monotone<T: Scalar>(h: Hurst<T>, tmax: T, gridsize: usize) -> Result<MonotoneReport> {
    if !(tmax > T::zero()) || gridsize < 1 {
        return Err(Error::InvalidArgument("verify_monotone needs tmax > 0 and gridsize >= 1".into()));
    }
    let n = T::from_usize(gridsize).unwrap();
    let mut prev = dual_ifbm_corr(h, T::zero());
    let start_value = prev.to_f64().unwrap();
    let mut max_increase = f64::NEG_INFINITY;
    let mut violations = Vec::new();
    for i in 1..=gridsize {
        let t = tmax * T::from_usize(i).unwrap() / n;
        let b = dual_ifbm_corr(h, t);
        let inc = (b - prev).to_f64().unwrap();
        max_increase = max_increase.max(inc);
        if inc > 1e-12 {
            violations.push(t.to_f64().unwrap());
        }
        prev = b;
    }
    Ok(MonotoneReport {
        hurst: h.value().to_f64().unwrap(),
        tmax: tmax.to_f64().unwrap(),
        gridsize,
        start_value,
        max_increase,
        passed: violations.is_empty(),
        violations,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CoshBoundReport {
    pub hurst: f64,
    pub tmax: f64,
    pub gridsize: usize,
    /// `inf_t arccosh(1/B_H(t)) / (H(1-H)t)` over the grid.
    pub rho_star: f64,
    pub argmin_t: f64,
    /// Smallest grid time from which `B_H(t) <= 1/cosh(H(1-H)t)` holds at every
    /// later grid point; `None` when the last grid point still violates it.
    pub t_star: Option<f64>,
    pub max_b: f64,
    pub passed: bool,
}

/// Largest `rho` with `B_H(t) <= 1/cosh(rho H (1-H) t)` on a grid of `(0, tmax]`.
///
/// Grid times where `B_H(t) <= 0` are skipped since every `rho` works there.
/// Fails when `rho* <= 0` or `B_H > 1` anywhere on the grid.
pub fn verify_cosh_bound<T: Scalar>(h: Hurst<T>, tmax: T, gridsize: usize) -> Result<CoshBoundReport> {
    if !(tmax >= T::lit(10.0)) || gridsize < 1 {
        return Err(Error::InvalidArgument("verify_cosh_bound needs tmax >= 10 and gridsize >= 1".into()));
    }
    let hh = h.value() * h.complement();
    let n = T::from_usize(gridsize).unwrap();
    let mut rho_star = f64::INFINITY;
    let mut argmin_t = f64::NAN;
    let mut max_b = f64::NEG_INFINITY;
    let mut last_violation: Option<usize> = None;
    let mut out_of_range = false;
    for i in 1..=gridsize {
        let t = tmax * T::from_usize(i).unwrap() / n;
        let b = dual_ifbm_corr(h, t);
        max_b = max_b.max(b.to_f64().unwrap());
        if b > T::one() + T::lit(1e-14) {
            out_of_range = true;
        }
        if b > T::one() / (hh * t).cosh() {
            last_violation = Some(i);
        }
        if b <= T::zero() {
            continue;
        }
        let Some(ac) = acosh_clamped(T::one() / b) else {
            out_of_range = true;
            continue;
        };
        let rho = (ac / (hh * t)).to_f64().unwrap();
        if rho < rho_star {
            rho_star = rho;
            argmin_t = t.to_f64().unwrap();
        }
    }
    let t_star = match last_violation {
        None => Some((tmax / n).to_f64().unwrap()),
        Some(i) if i < gridsize => Some((tmax * T::from_usize(i + 1).unwrap() / n).to_f64().unwrap()),
        Some(_) => None,
    };
    Ok(CoshBoundReport {
        hurst: h.value().to_f64().unwrap(),
        tmax: tmax.to_f64().unwrap(),
        gridsize,
        rho_star,
        argmin_t,
        t_star,
        max_b,
        passed: rho_star > 0.0 && rho_star.is_finite() && !out_of_range,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h(v: f64) -> Hurst<f64> {
        Hurst::new(v).unwrap()
    }

    #[test]
    fn r_poly_examples() {
        for &hv in &[0.05, 0.3, 0.5, 0.8, 0.95] {
            assert_eq!(r_poly(h(hv), 0.0).unwrap(), 0.0);
            assert!(r_poly(h(hv), 1.0).unwrap().abs() < 1e-15);
        }
        // 2H = 1: 1 - 0.5 - 0.5 * 0.75 + 0.25 - 0.125
        assert!((r_poly(h(0.5), 0.5).unwrap() - 0.25).abs() < 1e-15);
        assert!(r_poly(h(0.5), 1.5).is_err());
        assert!(r_poly(h(0.5), -0.1).is_err());
    }

    #[test]
    fn r_nonneg_sweeps() {
        for &hv in &[0.1, 0.5, 0.9] {
            let rep = verify_r_nonneg(h(hv), 1001).unwrap();
            assert!(rep.passed, "{rep:?}");
        }
        let rep = verify_r_nonneg(h(0.5), 1001).unwrap();
        assert!(rep.min_value.abs() < 1e-15 && (rep.argmin == 0.0 || rep.argmin == 1.0));
        assert!(verify_r_nonneg(h(0.5), 1).is_err());
    }

    #[test]
    fn r_matches_derivative_of_b() {
        // B'(t) = -(1+H)/(2+4H) e^{(1+H)t} R(e^{-t}) against central differences
        for &hv in &[0.2, 0.5, 0.8] {
            for &t in &[0.3, 1.0, 2.5, 5.0] {
                let d = 1e-5;
                let fd = (dual_ifbm_corr(h(hv), t + d) - dual_ifbm_corr(h(hv), t - d)) / (2.0 * d);
                let an = -(1.0 + hv) / (2.0 + 4.0 * hv) * ((1.0 + hv) * t).exp() * r_poly(h(hv), (-t).exp()).unwrap();
                assert!((fd - an).abs() < 1e-8, "H={hv} t={t}: {fd} vs {an}");
            }
        }
    }

    #[test]
    fn monotone_examples() {
        let rep = verify_monotone(h(0.5), 10.0, 1000).unwrap();
        assert!(rep.passed && rep.start_value == 1.0, "{rep:?}");
        let rep = verify_monotone(h(0.2), 20.0, 2000).unwrap();
        assert!(rep.passed, "{rep:?}");
    }

    #[test]
    fn cosh_bound_examples() {
        let rep = verify_cosh_bound(h(0.5), 50.0, 5000).unwrap();
        assert!(rep.passed && rep.rho_star > 0.0, "{rep:?}");
        assert!(rep.t_star.is_some());
        assert!(verify_cosh_bound(h(0.5), 5.0, 100).is_err());
    }

    #[test]
    fn cosh_bound_holds_at_rho_star() {
        for &hv in &[0.1, 0.3, 0.7, 0.9] {
            let rep = verify_cosh_bound(h(hv), 40.0, 4000).unwrap();
            let rho = rep.rho_star.min(1.0) * (1.0 - 1e-9);
            for i in 1..=4000 {
                let t = 0.01 * i as f64;
                let b = dual_ifbm_corr(h(hv), t);
                assert!(b <= 1.0 / (rho * hv * (1.0 - hv) * t).cosh() + 1e-15, "H={hv} t={t}");
            }
        }
    }

    #[test]
    fn dual_ifbm_at_h03_t5_under_envelope() {
        let rep = verify_cosh_bound(h(0.3), 50.0, 5000).unwrap();
        let v = dual_ifbm_corr(h(0.3), 5.0);
        assert!(v > 0.0 && v <= 1.0 / (rep.rho_star.min(1.0) * 0.21 * 5.0).cosh());
    }
}
