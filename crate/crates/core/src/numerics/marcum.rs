//! First-order Marcum Q function as a Poisson mixture.
//!
//! ```text
//! Q(a, b)     = sum_k Pois(k; a^2/2) * P[Pois(b^2/2) <= k]
//! 1 - Q(a, b) = sum_k Pois(k; a^2/2) * P[Pois(b^2/2) >  k]
//! ```
//!
//! Both sums have non-negative terms and are accumulated in log domain, so the
//! complement stays accurate far below `1e-300`.

use super::gamma::poisson_log_pmf;
use super::logspace::{log_add_exp, LogAccumulator};
use super::NumericsConfig;

/// Index range that carries all but a certified `tail` of Poisson(lambda) mass
/// on the right.
fn poisson_upper_index(lambda: f64, log_tol: f64) -> usize {
    let mut k = (lambda + 40.0 * lambda.sqrt() + 60.0).ceil() as usize;
    loop {
        let kf = k as f64;
        let ratio = lambda / (kf + 2.0);
        let log_tail = poisson_log_pmf(kf + 1.0, lambda) - (1.0 - ratio).ln();
        if ratio < 1.0 && log_tail < log_tol {
            return k;
        }
        k *= 2;
    }
}

/// Returns `(ln Q, ln(1 - Q))`.
fn log_marcum_pair(a: f64, b: f64, cfg: &NumericsConfig) -> (f64, f64) {
    debug_assert!(a >= 0.0 && b >= 0.0);
    let la = 0.5 * a * a;
    let lb = 0.5 * b * b;
    if lb == 0.0 {
        return (0.0, f64::NEG_INFINITY);
    }
    if la == 0.0 {
        return (-lb, (-(-lb).exp_m1()).ln());
    }

    // Right truncation of the mixing Poisson: ~1e-15 additive, and well below
    // any complement value we could hope to resolve.
    let log_tol = cfg.series_tol.ln().min(-745.0);
    let k_max = poisson_upper_index(la, log_tol);
    let j_max = poisson_upper_index(lb, log_tol).max(k_max + 1);

    let log_pb: Vec<f64> = (0..=j_max).map(|j| poisson_log_pmf(j as f64, lb)).collect();

    // lower[k] = ln P[Pois(lb) <= k]
    let mut lower = Vec::with_capacity(k_max + 1);
    let mut run = f64::NEG_INFINITY;
    for &lp in log_pb.iter().take(k_max + 1) {
        run = log_add_exp(run, lp);
        lower.push(run);
    }
    // upper[k] = ln P[Pois(lb) > k], built right to left
    let mut upper = vec![f64::NEG_INFINITY; k_max + 1];
    let mut run = f64::NEG_INFINITY;
    for j in (1..=j_max).rev() {
        run = log_add_exp(run, log_pb[j]);
        if j - 1 <= k_max {
            upper[j - 1] = run;
        }
    }

    let mut q = LogAccumulator::new();
    let mut qc = LogAccumulator::new();
    for k in 0..=k_max {
        let lpa = poisson_log_pmf(k as f64, la);
        q.add(lpa + lower[k]);
        qc.add(lpa + upper[k]);
    }
    (q.value().min(0.0), qc.value().min(0.0))
}

/// `ln Q(a, b)`.
pub fn log_marcum_q(a: f64, b: f64) -> f64 {
    log_marcum_pair(a, b, &NumericsConfig::default()).0
}

/// `ln(1 - Q(a, b))`, accurate when `Q` is close to one.
pub fn log_marcum_q_complement(a: f64, b: f64) -> f64 {
    log_marcum_pair(a, b, &NumericsConfig::default()).1
}

pub fn marcum_q(a: f64, b: f64) -> f64 {
    log_marcum_q(a, b).exp().clamp(0.0, 1.0)
}
