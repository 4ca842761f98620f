//! Binary discrimination of commuting (number-diagonal) states with equal
//! priors.
//!
//! For diagonal states the Helstrom limit is half the overlap
//! `sum_n min(p_n, q_n)`, which is what is evaluated here; it equals
//! `(1 - sum_{p_n > q_n} (p_n - q_n)) / 2` for normalised inputs but stays
//! accurate when the error probability is far below machine epsilon.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::golden::golden_section_min;
use crate::numerics::logspace::{log_add_exp, LogAccumulator, LogValue};
use crate::photon_stats::FockPmf;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Helstrom,
    Threshold,
    Qcb,
    Ng,
    Roc,
}

/// An error probability (log domain), the threshold that achieves it when it
/// comes from a counting receiver, and how it was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscriminationResult {
    pub log_p_error: LogValue,
    pub optimal_threshold: Option<usize>,
    pub method: Method,
}

impl DiscriminationResult {
    pub fn new(log_p_error: LogValue, method: Method) -> Self {
        DiscriminationResult {
            log_p_error,
            optimal_threshold: None,
            method,
        }
    }

    pub fn p_error(&self) -> f64 {
        self.log_p_error.linear()
    }

    pub fn ln_p(&self) -> f64 {
        self.log_p_error.log()
    }
}

fn common_len(p: &FockPmf, q: &FockPmf) -> usize {
    p.len().max(q.len())
}

/// Helstrom limit `(1/2) sum_n min(p_n, q_n)`.
pub fn helstrom_diagonal(p: &FockPmf, q: &FockPmf) -> DiscriminationResult {
    let overlap: LogAccumulator = (0..common_len(p, q))
        .map(|n| p.log_prob(n).min(q.log_prob(n)))
        .collect();
    let lp = (overlap.value() + LogValue::HALF.log()).min(LogValue::HALF.log());
    DiscriminationResult::new(LogValue::from_log(lp), Method::Helstrom)
}

/// Error of the receiver that declares the target present iff the count
/// exceeds `threshold`; `p` is the target-absent distribution.
///
/// Evaluated as `(1/2) [P(n > N | absent) + P(n <= N | present)]`.
pub fn threshold_error(p: &FockPmf, q: &FockPmf, threshold: usize) -> Result<DiscriminationResult> {
    let len = common_len(p, q);
    if threshold >= len {
        return Err(Error::usage(
            "threshold_error",
            format!("threshold {threshold} beyond common cutoff {}", len - 1),
        ));
    }
    let false_alarm: LogAccumulator = (threshold + 1..len).map(|n| p.log_prob(n)).collect();
    let miss: LogAccumulator = (0..=threshold).map(|n| q.log_prob(n)).collect();
    let lp = log_add_exp(false_alarm.value(), miss.value()) + LogValue::HALF.log();
    Ok(DiscriminationResult {
        log_p_error: LogValue::from_log(lp),
        optimal_threshold: Some(threshold),
        method: Method::Threshold,
    })
}

/// All threshold errors, `out[N] = ln P_N`.
pub fn threshold_error_curve(p: &FockPmf, q: &FockPmf) -> Vec<f64> {
    let len = common_len(p, q);
    // suffix[N] = ln sum_{n > N} p_n
    let mut suffix = vec![f64::NEG_INFINITY; len];
    let mut run = f64::NEG_INFINITY;
    for n in (1..len).rev() {
        run = log_add_exp(run, p.log_prob(n));
        suffix[n - 1] = run;
    }
    let mut prefix = f64::NEG_INFINITY;
    (0..len)
        .map(|n| {
            prefix = log_add_exp(prefix, q.log_prob(n));
            log_add_exp(suffix[n], prefix) + LogValue::HALF.log()
        })
        .collect()
}

/// Best counting threshold. Only the local minima of the error curve (last
/// index of each run where `p_n > q_n`) and `N = 0` are candidates, so equal
/// distributions give `N = 0` and ties resolve toward the smaller threshold.
pub fn optimal_threshold(p: &FockPmf, q: &FockPmf) -> DiscriminationResult {
    let len = common_len(p, q);
    let curve = threshold_error_curve(p, q);
    let mut best = 0usize;
    for n in 0..len {
        let rising = p.log_prob(n) > q.log_prob(n);
        let ends_run = n + 1 == len || p.log_prob(n + 1) <= q.log_prob(n + 1);
        if rising && ends_run && curve[n] < curve[best] {
            best = n;
        }
    }
    DiscriminationResult {
        log_p_error: LogValue::from_log(curve[best]),
        optimal_threshold: Some(best),
        method: Method::Threshold,
    }
}

/// `ln Q_s = ln sum_n p_n^s q_n^(1-s)` over the common support.
pub fn log_chernoff_q(p: &FockPmf, q: &FockPmf, s: f64) -> f64 {
    (0..common_len(p, q))
        .filter_map(|n| {
            let (lp, lq) = (p.log_prob(n), q.log_prob(n));
            (lp > f64::NEG_INFINITY && lq > f64::NEG_INFINITY).then_some(s * lp + (1.0 - s) * lq)
        })
        .collect::<LogAccumulator>()
        .value()
}

/// Minimiser of `ln Q_s` over `[0, 1]` by golden-section search, together with
/// the minimum. `ln Q_s` is convex in `s`.
pub fn qcb_minimum(p: &FockPmf, q: &FockPmf, tol: f64) -> (f64, f64) {
    let f = |s: f64| log_chernoff_q(p, q, s);
    let mut best = golden_section_min(f, 0.0, 1.0, tol);
    for s in [0.0, 1.0] {
        let v = f(s);
        if v < best.1 {
            best = (s, v);
        }
    }
    best
}

/// Quantum Chernoff bound `(1/2) inf_s Q_s`.
pub fn qcb_diagonal(p: &FockPmf, q: &FockPmf) -> DiscriminationResult {
    qcb_diagonal_with_tol(p, q, 1e-8)
}

pub fn qcb_diagonal_with_tol(p: &FockPmf, q: &FockPmf, tol: f64) -> DiscriminationResult {
    let (_, log_q) = qcb_minimum(p, q, tol);
    let lp = (log_q + LogValue::HALF.log()).min(LogValue::HALF.log());
    DiscriminationResult::new(LogValue::from_log(lp), Method::Qcb)
}
