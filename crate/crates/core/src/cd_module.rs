//! Conversion-receiver error probabilities for a known reflectivity and a
//! uniformly random return phase.
//!
//! The heterodyne outcome enters only through `y = |x|^2 / sigma^2`, which is
//! chi-square distributed with `2M` degrees of freedom. Given `y` the idler is
//! the phase-averaged displaced thermal state with displacement energy
//! `xi * y`, and photon counting is optimal.

use serde::{Deserialize, Serialize};

use crate::discrimination::{
    helstrom_diagonal, optimal_threshold, qcb_diagonal_with_tol, threshold_error,
    DiscriminationResult, Method,
};
use crate::error::{Error, Result};
use crate::numerics::logspace::{LogAccumulator, LogValue};
use crate::numerics::quadrature::GaussLegendre;
use crate::numerics::{chi2_log_pdf, lambert_w_minus1, poisson_log_pmf, NumericsConfig};
use crate::photon_stats::{hypothesis_pair, idler_stats, FockPmf, ScenarioParams};

/// Convergence record of a node-doubling quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureReport {
    /// Node count of the returned (finest) level.
    pub nodes: usize,
    /// Relative change of the result against the previous level.
    pub rel_change: f64,
    pub converged: bool,
}

/// A probability from a doubling quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureResult {
    pub result: DiscriminationResult,
    pub quadrature: QuadratureReport,
}

/// Doubles the node count from `start` until the relative change of the
/// (log-domain) value drops below `rel_tol` or `max` is exceeded.
pub(crate) fn doubling<F>(
    start: usize,
    max: usize,
    rel_tol: f64,
    mut eval: F,
) -> Result<(f64, QuadratureReport)>
where
    F: FnMut(usize) -> Result<f64>,
{
    let mut n = start.max(1);
    let mut prev = eval(n)?;
    loop {
        let next_n = n * 2;
        if next_n > max {
            return Ok((
                prev,
                QuadratureReport {
                    nodes: n,
                    rel_change: f64::NAN,
                    converged: false,
                },
            ));
        }
        let cur = eval(next_n)?;
        let rel = if cur == prev {
            0.0
        } else {
            (cur - prev).exp_m1().abs()
        };
        n = next_n;
        if rel < rel_tol {
            return Ok((
                cur,
                QuadratureReport {
                    nodes: n,
                    rel_change: rel,
                    converged: true,
                },
            ));
        }
        if n * 2 > max {
            return Ok((
                cur,
                QuadratureReport {
                    nodes: n,
                    rel_change: rel,
                    converged: false,
                },
            ));
        }
        prev = cur;
    }
}

/// Target-absent and target-present idler distributions at `y = 2M`.
pub fn large_m_pair(params: &ScenarioParams, cfg: &NumericsConfig) -> Result<(FockPmf, FockPmf)> {
    let kappa = params.fixed_kappa("large_m_pair")?;
    hypothesis_pair(params, kappa, 2.0 * params.m as f64, cfg.fock_tail_tol)
}

/// Chi-square-averaged Helstrom limit of the conversion receiver.
pub fn pcd_exact(params: &ScenarioParams) -> Result<QuadratureResult> {
    pcd_exact_with(params, &NumericsConfig::default())
}

pub fn pcd_exact_with(params: &ScenarioParams, cfg: &NumericsConfig) -> Result<QuadratureResult> {
    let kappa = params.fixed_kappa("pcd_exact")?;
    let m = params.m as f64;
    let dof = 2 * params.m;
    let half_width = 20.0 * m.sqrt();
    let lo = (2.0 * m - half_width).max(0.0);
    let hi = 2.0 * m + half_width;

    let eval = |n: usize| -> Result<f64> {
        let rule = GaussLegendre::new(n)?;
        let mut num = LogAccumulator::new();
        let mut den = LogAccumulator::new();
        for (y, w) in rule.on(lo, hi) {
            let lw = w.ln() + chi2_log_pdf(y, dof);
            let (p, q) = hypothesis_pair(params, kappa, y, cfg.fock_tail_tol)?;
            num.add(lw + helstrom_diagonal(&p, &q).ln_p());
            den.add(lw);
        }
        // normalising by the quadrature mass of the density removes the
        // window-truncation and rule error common to both sums
        Ok(num.value() - den.value())
    };
    let (lp, quadrature) = doubling(
        cfg.quad_start_nodes,
        cfg.quad_max_nodes,
        cfg.quad_rel_tol,
        eval,
    )?;
    let lp = lp.min(LogValue::HALF.log());
    Ok(QuadratureResult {
        result: DiscriminationResult::new(LogValue::from_log(lp), Method::Helstrom),
        quadrature,
    })
}

/// Large-M approximation: the chi-square density collapses onto `y = 2M`.
/// Carries the optimal counting threshold.
pub fn pcd_large_m(params: &ScenarioParams) -> Result<DiscriminationResult> {
    pcd_large_m_with(params, &NumericsConfig::default())
}

pub fn pcd_large_m_with(
    params: &ScenarioParams,
    cfg: &NumericsConfig,
) -> Result<DiscriminationResult> {
    let (p, q) = large_m_pair(params, cfg)?;
    let h = helstrom_diagonal(&p, &q);
    let t = optimal_threshold(&p, &q);
    Ok(DiscriminationResult {
        optimal_threshold: t.optimal_threshold,
        ..h
    })
}

/// Error of a fixed counting threshold on the large-M pair.
pub fn pcd_threshold(params: &ScenarioParams, threshold: usize) -> Result<DiscriminationResult> {
    let (p, q) = large_m_pair(params, &NumericsConfig::default())?;
    if threshold > p.cutoff().max(q.cutoff()) {
        // both distributions are fully resolved below the cutoff, so every
        // larger threshold has the same error to within the tail bounds
        return threshold_error(&p, &q, p.cutoff().max(q.cutoff())).map(|r| DiscriminationResult {
            optimal_threshold: Some(threshold),
            ..r
        });
    }
    threshold_error(&p, &q, threshold)
}

/// Quantum Chernoff upper bound on the large-M pair.
pub fn pcd_qcb(params: &ScenarioParams) -> Result<DiscriminationResult> {
    let cfg = NumericsConfig::default();
    let (p, q) = large_m_pair(params, &cfg)?;
    Ok(qcb_diagonal_with_tol(&p, &q, cfg.golden_tol))
}

/// Low-brightness approximation of a counting threshold: vacuum against a
/// coherent state of energy `2 xi M`, `(1/2) sum_{n <= N} Pois(n; 2 xi M)`.
pub fn pcd_poisson_threshold(
    params: &ScenarioParams,
    threshold: usize,
) -> Result<DiscriminationResult> {
    let kappa = params.fixed_kappa("pcd_poisson_threshold")?;
    let energy = 2.0 * idler_stats(params, kappa)?.xi * params.m as f64;
    let mut acc = LogAccumulator::new();
    for n in 0..=threshold {
        let t = poisson_log_pmf(n as f64, energy);
        acc.add(t);
        // past the mode the remaining terms are geometrically bounded
        if n as f64 > energy && t < acc.value() - 40.0 {
            break;
        }
    }
    let lp = (acc.value().min(0.0)) + LogValue::HALF.log();
    Ok(DiscriminationResult {
        log_p_error: LogValue::from_log(lp),
        optimal_threshold: Some(threshold),
        method: Method::Threshold,
    })
}

/// Asymptotic threshold, error probability and error exponent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticQuantities {
    /// `-W_{-1}(-N_S / e)`.
    pub epsilon: f64,
    /// Asymptotic optimal threshold `2 xi M / epsilon` (real-valued).
    pub n_opt: f64,
    /// Stirling-form Poisson term at `n_opt`, including the `1/2` prior.
    pub log_p_asy: LogValue,
    /// `[1 - ln(e epsilon) / epsilon] 2 xi`.
    pub r_asy: f64,
    /// `-ln P_asy / M`.
    pub r_finite: f64,
}

pub fn asymptotics(params: &ScenarioParams, m: u64) -> Result<AsymptoticQuantities> {
    const OP: &str = "asymptotics";
    let kappa = params.fixed_kappa(OP)?;
    if m == 0 {
        return Err(Error::domain(OP, "m must be >= 1"));
    }
    let ns = params.n_s;
    if !(ns > 0.0 && ns < 1.0) {
        return Err(Error::domain(
            OP,
            format!("low-brightness asymptote needs 0 < n_s < 1, got {ns}"),
        ));
    }
    let epsilon = -lambert_w_minus1(-ns / std::f64::consts::E)?;
    let two_xi = 2.0 * idler_stats(params, kappa)?.xi;
    let r_asy = (1.0 - (1.0 + epsilon.ln()) / epsilon) * two_xi;
    let mf = m as f64;
    let energy = two_xi * mf;
    if energy == 0.0 {
        return Ok(AsymptoticQuantities {
            epsilon,
            n_opt: 0.0,
            log_p_asy: LogValue::HALF,
            r_asy,
            r_finite: std::f64::consts::LN_2 / mf,
        });
    }
    let n = energy / epsilon;
    let log_p = -std::f64::consts::LN_2 - energy + n * energy.ln()
        - 0.5 * (2.0 * std::f64::consts::PI * n).ln()
        - n * (n.ln() - 1.0);
    Ok(AsymptoticQuantities {
        epsilon,
        n_opt: n,
        log_p_asy: LogValue::from_log(log_p),
        r_asy,
        r_finite: -log_p / mf,
    })
}

/// Fixed-point iteration of the threshold equation before the `N >> 1`
/// simplification (Stirling form kept). Diagnostic only; the asymptote uses
/// the simplified threshold.
pub fn asymptotic_threshold_fixed_point(params: &ScenarioParams, m: u64) -> Result<f64> {
    const OP: &str = "asymptotic_threshold_fixed_point";
    let asy = asymptotics(params, m)?;
    let ns = params.n_s;
    let energy = asy.n_opt * asy.epsilon;
    if energy == 0.0 {
        return Ok(0.0);
    }
    let mut n = asy.n_opt;
    for _ in 0..200 {
        let arg = -ns
            * (1.0 / (1.0 + ns)).powf(1.0 + 1.0 / n)
            * (2.0 * std::f64::consts::PI * n).powf(1.0 / n)
            / std::f64::consts::E;
        let eps = -lambert_w_minus1(arg)?;
        let next = energy / eps;
        if (next - n).abs() <= 1e-12 * n {
            return Ok(next);
        }
        n = next;
    }
    Err(Error::non_convergence(
        OP,
        format!("threshold iteration stuck near {n}"),
    ))
}

/// `-ln P / M`.
pub fn finite_exponent(log_p: LogValue, m: u64) -> f64 {
    -log_p.log() / m as f64
}

/// Finite-M exponents along a grid of mode counts, stopped at the first
/// successive pair that agrees to `rel_tol`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentEstimate {
    /// `(M, -ln P(M) / M)` for every grid point evaluated.
    pub sequence: Vec<(u64, f64)>,
    /// Last evaluated exponent.
    pub value: f64,
    /// Relative change between the last two evaluated points.
    pub last_rel_change: f64,
    pub converged: bool,
}

pub fn converge_exponent<F>(m_grid: &[u64], rel_tol: f64, mut log_p: F) -> Result<ExponentEstimate>
where
    F: FnMut(u64) -> Result<LogValue>,
{
    if m_grid.len() < 2 || m_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::usage(
            "converge_exponent",
            "grid must be strictly increasing with >= 2 points",
        ));
    }
    let mut sequence = Vec::with_capacity(m_grid.len());
    let mut last_rel_change = f64::NAN;
    for &m in m_grid {
        let r = finite_exponent(log_p(m)?, m);
        if let Some(&(_, prev)) = sequence.last() {
            last_rel_change = if r == prev {
                0.0
            } else {
                (r / prev - 1.0).abs()
            };
        }
        sequence.push((m, r));
        if last_rel_change < rel_tol {
            return Ok(ExponentEstimate {
                value: r,
                sequence,
                last_rel_change,
                converged: true,
            });
        }
    }
    let value = sequence.last().map(|p| p.1).unwrap_or(f64::NAN);
    Ok(ExponentEstimate {
        sequence,
        value,
        last_rel_change,
        converged: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference(m: u64) -> ScenarioParams {
        ScenarioParams::fixed(0.001, 20.0, 0.01, m)
    }

    #[test]
    fn no_return_gives_half() {
        let p = ScenarioParams::fixed(0.001, 20.0, 0.0, 1_000_000);
        for lp in [
            pcd_large_m(&p).unwrap().ln_p(),
            pcd_exact(&p).unwrap().result.ln_p(),
        ] {
            assert!((lp + std::f64::consts::LN_2).abs() < 1e-13, "{lp}");
        }
    }

    #[test]
    fn rayleigh_rejected() {
        let p = ScenarioParams::rayleigh(0.001, 20.0, 0.01, 1000);
        assert!(matches!(pcd_exact(&p), Err(Error::Usage { .. })));
        assert!(matches!(pcd_large_m(&p), Err(Error::Usage { .. })));
    }

    #[test]
    fn kennedy_closed_form() {
        let p = reference(10_000_000);
        let xi = idler_stats(&p, 0.01).unwrap().xi;
        let r = pcd_poisson_threshold(&p, 0).unwrap();
        let expected = -std::f64::consts::LN_2 - 2.0 * xi * 1e7;
        assert!((r.ln_p() - expected).abs() <= 1e-15 * expected.abs());
    }

    #[test]
    fn poisson_full_mass() {
        let p = reference(10_000_000);
        let r = pcd_poisson_threshold(&p, 10_000).unwrap();
        assert!((r.p_error() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn threshold_zero_is_kennedy_on_exact_pmfs() {
        let p = reference(10_000_000);
        let g0 = crate::photon_stats::gamma_n(0, 2e7, &p, 0.01).unwrap();
        let r = pcd_threshold(&p, 0).unwrap();
        assert!((r.p_error() - 0.5 * (1.0 - g0)).abs() < 1e-15);
    }

    #[test]
    fn epsilon_and_exponent() {
        let a = asymptotics(&reference(1), 1).unwrap();
        assert!((a.epsilon - 10.23).abs() < 0.01, "{}", a.epsilon);
        let xi = idler_stats(&reference(1), 0.01).unwrap().xi;
        let ratio = a.r_asy / (2.0 * xi);
        assert!((ratio - (1.0 - (std::f64::consts::E * a.epsilon).ln() / a.epsilon)).abs() < 1e-14);
        assert!((a.r_asy - 3.25e-7).abs() < 0.01e-7, "{}", a.r_asy);
    }

    #[test]
    fn finite_exponent_approaches_limit() {
        let a = asymptotics(&reference(1), 1_000_000_000).unwrap();
        assert!((a.r_finite / a.r_asy - 1.0).abs() < 0.02);
    }

    #[test]
    fn bright_source_rejected() {
        let p = ScenarioParams::fixed(1.0, 20.0, 0.01, 1);
        assert!(matches!(asymptotics(&p, 100), Err(Error::Domain { .. })));
    }

    #[test]
    fn fixed_point_threshold_is_close_to_simplified() {
        let p = reference(1);
        let m = 1_000_000_000;
        let simple = asymptotics(&p, m).unwrap().n_opt;
        let fp = asymptotic_threshold_fixed_point(&p, m).unwrap();
        assert!((fp / simple - 1.0).abs() < 0.1, "{fp} vs {simple}");
    }

    #[test]
    fn finite_exponent_basics() {
        assert_eq!(finite_exponent(LogValue::from_log(-7.0), 7), 1.0);
        assert_eq!(finite_exponent(LogValue::ONE, 5), 0.0);
        let p = reference(10_000_000);
        let r = finite_exponent(pcd_large_m(&p).unwrap().log_p_error, p.m);
        let kennedy = finite_exponent(pcd_threshold(&p, 0).unwrap().log_p_error, p.m);
        assert!(r >= kennedy && kennedy > 0.0, "{r} vs {kennedy}");
    }

    #[test]
    fn exponent_grid_rejects_unordered() {
        assert!(converge_exponent(&[4, 2, 8], 0.005, |_| Ok(LogValue::HALF)).is_err());
    }
}
