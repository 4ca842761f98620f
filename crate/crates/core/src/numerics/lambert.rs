use std::f64::consts::E;

use crate::error::{Error, Result};

const BRANCH_POINT: f64 = -1.0 / E;

/// Lower real branch `W_{-1}(x)` for `x` in `[-1/e, 0)`.
///
/// Starts from the branch-point series near `-1/e` or the log asymptote near
/// zero, then polishes with Halley iterations.
pub fn lambert_w_minus1(x: f64) -> Result<f64> {
    if x.is_nan() || x >= 0.0 || x < BRANCH_POINT - 4.0 * f64::EPSILON {
        return Err(Error::domain(
            "lambert_w_minus1",
            format!("x = {x} not in [-1/e, 0)"),
        ));
    }
    if x <= BRANCH_POINT {
        return Ok(-1.0);
    }

    let mut w = if x < -0.25 {
        let p = -(2.0 * (1.0 + E * x)).max(0.0).sqrt();
        -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p
    } else {
        let l1 = (-x).ln();
        let l2 = (-l1).ln();
        l1 - l2 + l2 / l1
    };

    for _ in 0..64 {
        let ew = w.exp();
        let f = w * ew - x;
        let wp1 = w + 1.0;
        if wp1.abs() < 1e-300 {
            break;
        }
        let denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
        let step = f / denom;
        let next = w - step;
        // the branch is w <= -1
        let next = if next > -1.0 { 0.5 * (w - 1.0) } else { next };
        if (next - w).abs() <= 4.0 * f64::EPSILON * next.abs() {
            return Ok(next);
        }
        w = next;
    }
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bisect(x: f64) -> f64 {
        // w e^w falls from 0 to -1/e on (-inf, -1]
        let (mut lo, mut hi) = (-50.0f64, -1.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid * mid.exp() > x {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn branch_point() {
        assert_eq!(lambert_w_minus1(-1.0 / E).unwrap(), -1.0);
    }

    #[test]
    fn defining_identity() {
        let w = lambert_w_minus1(-2.0 * (-2.0f64).exp()).unwrap();
        assert!((w + 2.0).abs() < 1e-13);
    }

    #[test]
    fn small_argument_against_bisection() {
        let x = -0.001 / E;
        let w = lambert_w_minus1(x).unwrap();
        let oracle = bisect(x);
        assert!((w - oracle).abs() < 1e-11, "{w} vs {oracle}");
        assert!((w + 10.23).abs() < 0.01);
    }

    #[test]
    fn outside_domain() {
        assert!(lambert_w_minus1(0.0).is_err());
        assert!(lambert_w_minus1(0.1).is_err());
        assert!(lambert_w_minus1(-0.5).is_err());
        assert!(lambert_w_minus1(f64::NAN).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn residual_is_tiny(t in 0.0f64..1.0, scale in -30.0f64..0.0) {
            // half the draws near the branch point, half spread log-uniformly toward 0
            let x = if t < 0.5 { -1.0 / E * (1.0 - t * 1.999) } else { -(10f64).powf(scale) / E };
            let w = lambert_w_minus1(x).unwrap();
            prop_assert!(w <= -1.0);
            prop_assert!((w * w.exp() - x).abs() <= 1e-13 * x.abs(), "x={} w={}", x, w);
        }
    }
}
