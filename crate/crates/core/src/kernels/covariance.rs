use super::Hurst;
use crate::scalar::{pow1m_remainder_over_sq, pow_abs, Scalar};

/// fBm covariance `(|a|^{2H} + |b|^{2H} - |a-b|^{2H}) / 2`.
pub fn fbm_cov<T: Scalar>(h: Hurst<T>, a: T, b: T) -> T {
    let p = h.twice();
    T::half() * (pow_abs(a, p) + pow_abs(b, p) - pow_abs(a - b, p))
}

/// Fractional Brownian sheet covariance: product of per-coordinate fBm covariances.
pub fn fbs_cov<T: Scalar>(h: Hurst<T>, s: [T; 2], t: [T; 2]) -> T {
    fbm_cov(h, s[0], t[0]) * fbm_cov(h, s[1], t[1])
}

/// Covariance of integrated fBm `x(s) = int_0^s b_H(u) du`.
///
/// With `p = 2H` and `I(s) = sgn(s)|s|^{p+1}/(p+1)`,
///
/// ```text
/// E x(s)x(t) = [ t I(s) + s I(t) - (|s|^{p+2} + |t|^{p+2} - |s-t|^{p+2}) / ((p+1)(p+2)) ] / 2
/// ```
///
/// valid for any signs of `s` and `t`.
pub fn ifbm_cov<T: Scalar>(h: Hurst<T>, s: T, t: T) -> T {
    let one = T::one();
    let p = h.twice();
    let p1 = p + one;
    let p2 = p1 + one;
    let signed = |x: T| x.signum() * pow_abs(x, p1) / p1;
    let g = |x: T| pow_abs(x, p2);
    T::half() * (t * signed(s) + s * signed(t) - (g(s) + g(t) - g(s - t)) / (p1 * p2))
}

/// Correlation of the stationary dual `xi(t) = e^{-(1+H)t} x_H(e^t)` of
/// integrated fBm:
///
/// ```text
/// B_H(t) = [2(1+H)(e^{Ht} + e^{-Ht}) - (e^{(1+H)t} + e^{-(1+H)t}) + (e^{t/2} - e^{-t/2})^{2H+2}] / (2+4H)
/// ```
///
/// The leading exponentials cancel analytically; this evaluates the
/// remainder `e^{(H-1)t} ((1-x)^q - 1 + qx)/x^2` with `x = e^{-t}`, `q = 2H+2`,
/// which is exact in the same algebra and stays accurate for large `t`.
pub fn dual_ifbm_corr<T: Scalar>(h: Hurst<T>, t: T) -> T {
    let one = T::one();
    let t = t.abs();
    let hv = h.value();
    let q = h.twice() + T::two();
    let x = (-t).exp();
    let rem = pow1m_remainder_over_sq(q, x);
    let num = q * (-hv * t).exp() - (-(one + hv) * t).exp() + ((hv - one) * t).exp() * rem;
    num / (T::two() + T::lit(4.0) * hv)
}

/// Correlation of the stationary dual `e^{-Ht} b_H(e^t)` of fBm,
/// `cosh(Ht) - (2 sinh(t/2))^{2H} / 2`, evaluated in cancellation-free form.
pub fn dual_fbm_corr<T: Scalar>(h: Hurst<T>, t: T) -> T {
    let one = T::one();
    let t = t.abs();
    let hv = h.value();
    let x = (-t).exp();
    // (1 - (1-x)^{2H}) / x, with the x -> 0 limit 2H
    let k = if x == T::zero() { h.twice() } else { -(h.twice() * (-x).ln_1p()).exp_m1() / x };
    T::half() * ((-hv * t).exp() + ((hv - one) * t).exp() * k)
}

/// Correlation of the dual stationary sheet, `dual_fbm_corr(|t1|) dual_fbm_corr(|t2|)`.
pub fn dual_fbs_corr<T: Scalar>(h: Hurst<T>, t1: T, t2: T) -> T {
    dual_fbm_corr(h, t1.abs()) * dual_fbm_corr(h, t2.abs())
}

/// `1 / cosh(scale * t)`.
pub fn sech_corr<T: Scalar>(t: T, scale: T) -> T {
    T::one() / (scale * t).cosh()
}
