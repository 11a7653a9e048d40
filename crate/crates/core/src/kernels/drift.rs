//! Shift functions and norms used to verify the hypotheses behind the
//! exponent-existence argument for the fractional Brownian sheet.

use super::{fbs_cov, Hurst};
use crate::error::{Error, Result};
use crate::scalar::{pow_abs, Scalar};

/// `f(x) = |x|^{2H} + 1 - |x-1|^{2H}`; `f > 1` for `x > 1/2`.
pub fn f_drift<T: Scalar>(h: Hurst<T>, x: T) -> T {
    let p = h.twice();
    pow_abs(x, p) + T::one() - pow_abs(x - T::one(), p)
}

/// `psi_a(s) = f(s_1/a) f(s_2 a)`, the covariance of the sheet at `s` with
/// `4 x(a, 1/a)` (up to the `a`-dependent normalization).
pub fn psi_drift<T: Scalar>(h: Hurst<T>, a: T, s: [T; 2]) -> Result<T> {
    if !(a > T::zero()) {
        return Err(Error::InvalidArgument(format!("psi_drift needs a > 0, got {a}")));
    }
    Ok(f_drift(h, s[0] / a) * f_drift(h, s[1] * a))
}

/// Correlation `B(n) = (2^{-2Hn} + 1 - |2^{-n} - 1|^{2H})^2 2^{2Hn}` of the
/// stationary sequence `4 x(2^n, 2^{-n})`, evaluated at `|n|`.
pub fn eta_corr<T: Scalar>(h: Hurst<T>, n: i64) -> T {
    let p = h.twice();
    let m = T::from_u64(n.unsigned_abs()).expect("lag fits the scalar");
    let y = T::two().powf(-m);
    // With k = (1 - (1-y)^{2H}) / y the base is y^{2H} + y k, so
    // B = (2^{-Hm} + k 2^{(H-1)m})^2 and no factor over- or underflows.
    let k = if y == T::zero() { p } else { -(p * (-y).ln_1p()).exp_m1() / y };
    let hv = h.value();
    let g = T::two().powf(-hv * m) + k * T::two().powf((hv - T::one()) * m);
    g * g
}

/// `sum_{k in Z} B(k)`, truncated once a geometric bound on the tail falls
/// below `1e-12`.
pub fn eta_series_sum<T: Scalar>(h: Hurst<T>) -> T {
    let gamma = T::two() * h.value().min(h.complement());
    let ratio = T::two().powf(-gamma);
    let tail_factor = T::one() / (T::one() - ratio);
    let tol = T::lit(1e-12);
    let mut sum = eta_corr(h, 0);
    for k in 1..1_000_000_i64 {
        let b = eta_corr(h, k);
        sum = sum + T::two() * b;
        if T::two() * b * ratio * tail_factor < tol {
            break;
        }
    }
    sum
}

/// `||phi_T||^2 = sum_{|n|,|m| <= N} B(n - m)`.
pub fn phi_norm_sq<T: Scalar>(h: Hurst<T>, n: u32) -> T {
    let n = i64::from(n);
    let width = 2 * n + 1;
    (-2 * n..=2 * n).fold(T::zero(), |acc, k| {
        let mult = T::from_i64(width - k.abs()).expect("small integer");
        acc + mult * eta_corr(h, k)
    })
}

/// Modulus bound `c_H (1 + 2 T^{-2} h^{-1})^{-2H}`.
///
/// `c_H` is supplied by the caller; see [`lemma1_modulus`] for fitting it.
pub fn lemma1_bound<T: Scalar>(h: Hurst<T>, big_t: T, step: T, c_h: T) -> Result<T> {
    if !(big_t > T::one()) {
        return Err(Error::InvalidArgument(format!("lemma1_bound needs T > 1, got {big_t}")));
    }
    if !(step > T::zero() && step <= T::one()) {
        return Err(Error::InvalidArgument(format!("lemma1_bound needs 0 < h <= 1, got {step}")));
    }
    if !(c_h > T::zero()) {
        return Err(Error::InvalidArgument(format!("lemma1_bound needs c_H > 0, got {c_h}")));
    }
    let base = T::one() + T::two() / (big_t * big_t * step);
    Ok(c_h * base.powf(-h.twice()))
}

/// Grid estimate of the sheet's modulus on `U_0 = {s_1 s_2 < 1} cap [0,T]^2`
/// in the coordinates `a_1 = s_1/T`, `a_2 = s_1 s_2`:
///
/// ```text
/// delta_T^2(h) = sup { E|x(s) - x(s')|^2 : |a_1 - a_1'| < h, |a_2 - a_2'| < h }
/// ```
///
/// The supremum runs over an `n x n` grid of `(a_1, a_2) in (0,1]^2` restricted
/// to `s_2 <= T`. Variances are exact kernel values.
pub fn lemma1_modulus<T: Scalar>(h: Hurst<T>, big_t: T, step: T, n: usize) -> Result<T> {
    if !(big_t > T::one()) || n < 2 {
        return Err(Error::InvalidArgument("lemma1_modulus needs T > 1 and n >= 2".into()));
    }
    let nn = T::from_usize(n).expect("grid size");
    let mut pts = Vec::with_capacity(n * n);
    for i in 1..=n {
        let a1 = T::from_usize(i).unwrap() / nn;
        for j in 1..=n {
            // a_2 strictly below 1 keeps the point inside the open set s_1 s_2 < 1
            let a2 = (T::from_usize(j).unwrap() - T::half()) / nn;
            let s1 = big_t * a1;
            let s2 = a2 / s1;
            if s2 <= big_t {
                pts.push(([a1, a2], [s1, s2]));
            }
        }
    }
    let var: Vec<T> = pts.iter().map(|(_, s)| fbs_cov(h, *s, *s)).collect();
    let mut sup = T::zero();
    for (i, (ai, si)) in pts.iter().enumerate() {
        for (j, (aj, sj)) in pts.iter().enumerate().skip(i + 1) {
            if (ai[0] - aj[0]).abs() < step && (ai[1] - aj[1]).abs() < step {
                let d = var[i] + var[j] - T::two() * fbs_cov(h, *si, *sj);
                if d > sup {
                    sup = d;
                }
            }
        }
    }
    Ok(sup)
}
