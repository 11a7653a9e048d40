//! Double-exponential (tanh-sinh) quadrature.
//!
//! Used as the numerical oracle for closed-form covariances and for the
//! one-dimensional integral in the bivariate normal CDF. Algebraic endpoint
//! singularities (`|u - v|^p` on a diagonal, `|u|^p` at zero) do not slow
//! convergence as long as they sit on an interval endpoint, so callers split
//! their domains at every kink.

use std::f64::consts::FRAC_PI_2;

/// Result of a quadrature call.
#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    /// Difference between the last two refinement levels.
    pub error: f64,
    pub evaluations: usize,
}

const MAX_LEVEL: usize = 9;
// |tau| beyond which weights underflow relative to the f64 grid.
const TAU_MAX: f64 = 4.0;

/// Integrate `f` over `[a, b]` (either orientation) to relative tolerance `rel_tol`.
///
/// `f` receives `(x, dist_a, dist_b)`: the node and its exact distances to
/// the two endpoints, so integrands with endpoint singularities can be
/// evaluated without cancellation.
pub fn tanh_sinh<F>(mut f: F, a: f64, b: f64, rel_tol: f64) -> QuadResult
where
    F: FnMut(f64, f64, f64) -> f64,
{
    if a == b {
        return QuadResult { value: 0.0, error: 0.0, evaluations: 0 };
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let half = 0.5 * (hi - lo);
    let mut evaluations = 0;

    let mut node = |tau: f64| -> f64 {
        let s = FRAC_PI_2 * tau.sinh();
        let cosh_s = s.cosh();
        let w = FRAC_PI_2 * tau.cosh() / (cosh_s * cosh_s);
        // distance to the nearer endpoint as half * (1 - tanh|s|) = half * 2/(e^{2|s|}+1)
        let near = half * 2.0 / ((2.0 * s.abs()).exp() + 1.0);
        let (x, da, db) = if s >= 0.0 { (hi - near, hi - lo - near, near) } else { (lo + near, near, hi - lo - near) };
        if near <= 0.0 || w == 0.0 {
            return 0.0;
        }
        evaluations += 1;
        let fx = f(x, da, db);
        if fx.is_finite() {
            w * fx
        } else {
            0.0
        }
    };

    let mut h = 1.0;
    let mut sum = node(0.0);
    let mut k = 1.0;
    while k * h <= TAU_MAX {
        sum += node(k * h) + node(-k * h);
        k += 1.0;
    }
    let mut estimate = h * sum * half;
    let mut error = f64::INFINITY;

    for _ in 1..=MAX_LEVEL {
        h *= 0.5;
        // new nodes are the odd multiples of h
        let mut j = 1.0;
        while j * h <= TAU_MAX {
            sum += node(j * h) + node(-j * h);
            j += 2.0;
        }
        let next = h * sum * half;
        error = (next - estimate).abs();
        estimate = next;
        if error <= rel_tol * estimate.abs().max(f64::MIN_POSITIVE) {
            break;
        }
    }
    QuadResult { value: sign * estimate, error, evaluations }
}

/// `int_0^s int_0^t k(u, v) dv du` for a kernel with possible kinks on the
/// diagonal `u = v` and on the axes.
///
/// The inner integral is split at `v = u`, the outer one at `u = t`.
pub fn double_integral_from_origin<K>(k: K, s: f64, t: f64, rel_tol: f64) -> f64
where
    K: Fn(f64, f64) -> f64,
{
    if s == 0.0 || t == 0.0 {
        return 0.0;
    }
    let inner = |u: f64| -> f64 {
        let (tlo, thi) = if t > 0.0 { (0.0, t) } else { (t, 0.0) };
        let orient = t.signum();
        let mut total = 0.0;
        if u > tlo && u < thi {
            total += tanh_sinh(|v, _, _| k(u, v), tlo, u, rel_tol).value;
            total += tanh_sinh(|v, _, _| k(u, v), u, thi, rel_tol).value;
        } else {
            total += tanh_sinh(|v, _, _| k(u, v), tlo, thi, rel_tol).value;
        }
        orient * total
    };
    let (slo, shi) = if s > 0.0 { (0.0, s) } else { (s, 0.0) };
    let orient = s.signum();
    let mut total = 0.0;
    if t > slo && t < shi {
        total += tanh_sinh(|u, _, _| inner(u), slo, t, rel_tol).value;
        total += tanh_sinh(|u, _, _| inner(u), t, shi, rel_tol).value;
    } else {
        total += tanh_sinh(|u, _, _| inner(u), slo, shi, rel_tol).value;
    }
    orient * total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_and_exponential() {
        let r = tanh_sinh(|x, _, _| x * x, 0.0, 3.0, 1e-14);
        assert!((r.value - 9.0).abs() < 1e-12, "{r:?}");
        let r = tanh_sinh(|x, _, _| x.exp(), 1.0, 0.0, 1e-14);
        assert!((r.value + (1f64.exp() - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn endpoint_singularities() {
        // int_0^1 x^{-1/2} dx = 2
        let r = tanh_sinh(|_, da, _| da.powf(-0.5), 0.0, 1.0, 1e-13);
        assert!((r.value - 2.0).abs() < 1e-10, "{r:?}");
        // int_0^1 ln x dx = -1
        let r = tanh_sinh(|_, da, _| da.ln(), 0.0, 1.0, 1e-13);
        assert!((r.value + 1.0).abs() < 1e-10, "{r:?}");
    }

    #[test]
    fn brownian_double_integral() {
        // int_0^1 int_0^1 min(u,v) = 1/3
        let v = double_integral_from_origin(|u, v| u.min(v), 1.0, 1.0, 1e-13);
        assert!((v - 1.0 / 3.0).abs() < 1e-12);
        // u < 1 contributes u - u^2/2, u > 1 contributes 1/2
        let v = double_integral_from_origin(|u, v| u.min(v), 2.0, 1.0, 1e-13);
        let expect = (0.5 - 1.0 / 6.0) + 0.5;
        assert!((v - expect).abs() < 1e-12, "{v}");
    }
}
