//! Scalar abstraction for the closed-form kernel layer.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive};

/// Floating point type the analytic kernels are written against (`f32`, `f64`).
pub trait Scalar: Float + FloatConst + FromPrimitive + Debug + Display + Default + Send + Sync + 'static {
    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal representable")
    }

    #[inline]
    fn half() -> Self {
        Self::lit(0.5)
    }

    #[inline]
    fn two() -> Self {
        Self::lit(2.0)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// `|x|^p` as `exp(p ln|x|)`, with `0^p = 0` for every `p > 0`.
#[inline]
pub fn pow_abs<T: Scalar>(x: T, p: T) -> T {
    let ax = x.abs();
    if ax == T::zero() {
        T::zero()
    } else {
        (p * ax.ln()).exp()
    }
}

/// `arccosh(x) = ln(x + sqrt(x^2 - 1))`, clamping `x` up to 1 when it sits
/// below 1 by no more than `1e-14`.
///
/// Returns `None` for arguments further below 1.
pub fn acosh_clamped<T: Scalar>(x: T) -> Option<T> {
    let one = T::one();
    let x = if x < one {
        if one - x <= T::lit(1e-14) {
            one
        } else {
            return None;
        }
    } else {
        x
    };
    Some((x + (x * x - one).sqrt()).ln())
}

/// `(1 - x)^q - 1 + q x` for `0 <= x <= 1`, free of cancellation for small `x`.
pub fn pow1m_remainder<T: Scalar>(q: T, x: T) -> T {
    x * x * pow1m_remainder_over_sq(q, x)
}

/// `((1 - x)^q - 1 + q x) / x^2`, continuous at `x = 0` where it equals `q(q-1)/2`.
///
/// For `x < 1/2` the binomial series `sum_{k>=2} C(q,k) (-x)^(k-2)` is summed
/// directly; above that the closed expression is well conditioned.
pub fn pow1m_remainder_over_sq<T: Scalar>(q: T, x: T) -> T {
    let one = T::one();
    if x >= T::half() {
        return (pow_abs(one - x, q) - one + q * x) / (x * x);
    }
    // term_k = C(q,k) (-x)^(k-2), term_{k+1} = term_k * (q - k) / (k + 1) * (-x)
    let mut term = q * (q - one) * T::half();
    let mut sum = term;
    let mut k = T::two();
    for _ in 0..400 {
        term = term * (q - k) / (k + one) * (-x);
        sum = sum + term;
        if term.abs() <= T::epsilon() * sum.abs() {
            break;
        }
        k = k + one;
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pow_abs_zero_branch() {
        assert_eq!(pow_abs(0.0_f64, 0.3), 0.0);
        assert_eq!(pow_abs(-0.0_f64, 1.7), 0.0);
        assert!((pow_abs(-2.0_f64, 1.5) - 2f64.powf(1.5)).abs() < 1e-14);
        assert!((pow_abs(3.0_f32, 0.5) - 3f32.sqrt()).abs() < 1e-6);
    }

    #[test]
    fn acosh_clamps_rounding_only() {
        assert_eq!(acosh_clamped(1.0 - 5e-15_f64), Some(0.0));
        assert!(acosh_clamped(1.0 - 1e-10_f64).is_none());
        let v = acosh_clamped(2.0_f64).unwrap();
        assert!((v - 2.0_f64.acosh()).abs() < 1e-15);
    }

    #[test]
    fn remainder_matches_direct_where_direct_is_safe() {
        for &q in &[0.3_f64, 1.0, 2.5, 3.9] {
            for &x in &[0.01, 0.1, 0.3, 0.49, 0.5, 0.9, 1.0] {
                let direct = (1.0 - x).powf(q) - 1.0 + q * x;
                let got = pow1m_remainder(q, x);
                assert!((got - direct).abs() < 1e-13, "q={q} x={x}: {got} vs {direct}");
            }
        }
    }

    #[test]
    fn remainder_small_x_leading_term() {
        let q = 2.6_f64;
        let x = 1e-30;
        let lead = q * (q - 1.0) / 2.0 * x * x;
        assert!((pow1m_remainder(q, x) / lead - 1.0).abs() < 1e-12);
    }
}
