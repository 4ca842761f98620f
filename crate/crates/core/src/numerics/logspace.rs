use std::fmt;
use std::ops::Mul;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Natural logarithm of a non-negative quantity. `-inf` encodes zero.
#[derive(Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LogValue(f64);

impl LogValue {
    pub const ZERO: LogValue = LogValue(f64::NEG_INFINITY);
    pub const ONE: LogValue = LogValue(0.0);
    pub const HALF: LogValue = LogValue(-std::f64::consts::LN_2);

    /// Wraps an already-logarithmic value. NaN and `+inf` are rejected.
    pub fn from_log(log: f64) -> Self {
        debug_assert!(
            !log.is_nan() && log != f64::INFINITY,
            "invalid log value {log}"
        );
        LogValue(log)
    }

    pub fn from_linear(x: f64) -> Self {
        debug_assert!(x >= 0.0, "negative linear value {x}");
        LogValue(x.ln())
    }

    #[inline]
    pub fn log(self) -> f64 {
        self.0
    }

    /// Linear value; underflows to zero below ~1e-308.
    #[inline]
    pub fn linear(self) -> f64 {
        self.0.exp()
    }

    pub fn is_zero(self) -> bool {
        self.0 == f64::NEG_INFINITY
    }

    pub fn min(self, other: LogValue) -> LogValue {
        if other.0 < self.0 {
            other
        } else {
            self
        }
    }

    pub fn max(self, other: LogValue) -> LogValue {
        if other.0 > self.0 {
            other
        } else {
            self
        }
    }
}

impl Mul for LogValue {
    type Output = LogValue;

    fn mul(self, rhs: LogValue) -> LogValue {
        LogValue(self.0 + rhs.0)
    }
}

impl fmt::Debug for LogValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LogValue({:e})", self.0)
    }
}

impl fmt::Display for LogValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "exp({})", self.0)
    }
}

/// `ln(e^a + e^b)`.
#[inline]
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if lo == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// `ln(e^a - e^b)` for `a >= b`; returns `-inf` when the two are equal.
#[inline]
pub fn log_diff_exp(a: f64, b: f64) -> f64 {
    debug_assert!(a >= b, "log_diff_exp requires a >= b ({a} < {b})");
    if b == f64::NEG_INFINITY {
        return a;
    }
    let d = b - a;
    if d >= 0.0 {
        return f64::NEG_INFINITY;
    }
    // ln(1 - e^d): the two branches keep full precision on either side of -ln 2.
    if d > -std::f64::consts::LN_2 {
        a + (-d.exp_m1()).ln()
    } else {
        a + (-d.exp()).ln_1p()
    }
}

/// Max-shifted `ln(sum(exp(t)))`. An empty slice is a usage error.
pub fn log_sum_exp(terms: &[f64]) -> Result<f64> {
    if terms.is_empty() {
        return Err(Error::usage("log_sum_exp", "empty term sequence"));
    }
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Ok(max);
    }
    let s: f64 = terms.iter().map(|&t| (t - max).exp()).sum();
    Ok(max + s.ln())
}

/// Streaming log-sum-exp. Keeps the total as `exp(shift) * scaled`.
#[derive(Debug, Clone, Copy)]
pub struct LogAccumulator {
    shift: f64,
    scaled: f64,
}

impl Default for LogAccumulator {
    fn default() -> Self {
        Self::new()
    }
}

impl LogAccumulator {
    pub fn new() -> Self {
        LogAccumulator {
            shift: f64::NEG_INFINITY,
            scaled: 0.0,
        }
    }

    #[inline]
    pub fn add(&mut self, t: f64) {
        if t == f64::NEG_INFINITY {
            return;
        }
        if t <= self.shift {
            self.scaled += (t - self.shift).exp();
        } else {
            self.scaled = self.scaled * (self.shift - t).exp() + 1.0;
            self.shift = t;
        }
    }

    pub fn value(&self) -> f64 {
        if self.shift == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.shift + self.scaled.ln()
        }
    }
}

impl Extend<f64> for LogAccumulator {
    fn extend<I: IntoIterator<Item = f64>>(&mut self, iter: I) {
        for t in iter {
            self.add(t);
        }
    }
}

impl FromIterator<f64> for LogAccumulator {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = LogAccumulator::new();
        acc.extend(iter);
        acc
    }
}
