//! Laguerre polynomials at negative argument and the regularized confluent
//! hypergeometric function `1F1~[n+1, 1, z] = e^z L_n(-z)`.
//!
//! For `z >= 0` every term of `L_n(-z) = sum_k C(n,k) z^k / k!` is positive and
//! the three-term recurrence
//!
//! ```text
//! (k+1) L_{k+1} = (2k+1+z) L_k - k L_{k-1}
//! ```
//!
//! is run on the ratios `r_k = L_k / L_{k-1} >= 1`, so `k / r_k <= k` and the
//! subtraction never loses more than one bit. `ln L_n` is the running sum of
//! `ln r_k`, which never overflows.

use crate::error::{Error, Result};

/// Iterator over `ln L_k(-z)` for `k = 0, 1, 2, ...`.
#[derive(Debug, Clone)]
pub struct LaguerreNegRatios {
    z: f64,
    k: u64,
    ratio: f64,
    log_value: f64,
}

impl LaguerreNegRatios {
    pub fn new(z: f64) -> Result<Self> {
        if !(z >= 0.0) || !z.is_finite() {
            return Err(Error::domain(
                "log_laguerre_1f1",
                format!("z = {z} must be finite and >= 0"),
            ));
        }
        Ok(LaguerreNegRatios {
            z,
            k: 0,
            ratio: 1.0,
            log_value: 0.0,
        })
    }
}

impl Iterator for LaguerreNegRatios {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        let out = self.log_value;
        let k = self.k as f64;
        // r_{k+1} from r_k; r_1 = 1 + z
        self.ratio = if self.k == 0 {
            1.0 + self.z
        } else {
            ((2.0 * k + 1.0 + self.z) - k / self.ratio) / (k + 1.0)
        };
        self.log_value += self.ratio.ln();
        self.k += 1;
        Some(out)
    }
}

/// `ln 1F1~[n+1, 1, z]` for `z >= 0`.
pub fn log_laguerre_1f1(n: u64, z: f64) -> Result<f64> {
    let log_l = LaguerreNegRatios::new(z)?
        .nth(n as usize)
        .expect("iterator is infinite");
    Ok(z + log_l)
}
