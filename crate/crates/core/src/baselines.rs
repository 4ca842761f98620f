//! Classical-illumination benchmarks and the entanglement lower bound.
//!
//! A coherent-state transmitter with `M N_S` total photons returns, after
//! phase averaging, a displaced thermal state with displacement energy
//! `M kappa N_S` and noise `E' = (1 - kappa) N_E`; without a target the
//! receiver sees thermal light with the full `N_E`.

use serde::{Deserialize, Serialize};

use crate::cd_module::{converge_exponent, ExponentEstimate};
use crate::discrimination::{helstrom_diagonal, DiscriminationResult, Method};
use crate::error::{Error, Result};
use crate::fading::{mixture_pmf, rayleigh_quadrature, KappaQuadrature};
use crate::numerics::logspace::{log_add_exp, LogValue};
use crate::numerics::{golden_section_min, log_marcum_q_complement, NumericsConfig};
use crate::photon_stats::{
    aligned_pair, phase_averaged_displaced_thermal_pmf_with, thermal_pmf_with, Reflectivity,
    ScenarioParams,
};

/// One operating point of a detector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub p_false_alarm: f64,
    pub p_detection: f64,
}

fn ci_component(
    params: &ScenarioParams,
    kappa: f64,
    rule: &crate::photon_stats::CutoffRule,
) -> Result<crate::FockPmf> {
    let d2 = params.m as f64 * kappa * params.n_s;
    phase_averaged_displaced_thermal_pmf_with(d2, (1.0 - kappa) * params.n_e, rule)
}

/// Helstrom limit of classical illumination.
pub fn ci_helstrom(params: &ScenarioParams) -> Result<DiscriminationResult> {
    ci_helstrom_with(params, &NumericsConfig::default())
}

pub fn ci_helstrom_with(
    params: &ScenarioParams,
    cfg: &NumericsConfig,
) -> Result<DiscriminationResult> {
    params.validate()?;
    let quad = match params.reflectivity {
        Reflectivity::Fixed(k) => KappaQuadrature::point(k),
        Reflectivity::Rayleigh(kb) => rayleigh_quadrature(kb, cfg.kappa_nodes)?,
    };
    ci_helstrom_on(params, &quad, cfg)
}

/// Classical Helstrom limit for an explicit reflectivity rule.
pub fn ci_helstrom_on(
    params: &ScenarioParams,
    quad: &KappaQuadrature,
    cfg: &NumericsConfig,
) -> Result<DiscriminationResult> {
    let (p, q) = aligned_pair(
        |r| thermal_pmf_with(params.n_e, r),
        |r| mixture_pmf(quad, r, |k, r| ci_component(params, k, r)),
        cfg.fock_tail_tol,
    )?;
    Ok(helstrom_diagonal(&p, &q))
}

/// Noise photon number of the target-present return used by the ROC.
fn roc_noise(params: &ScenarioParams) -> f64 {
    let k = match params.reflectivity {
        Reflectivity::Fixed(k) => k,
        Reflectivity::Rayleigh(kb) => kb,
    };
    (1.0 - k) * params.n_e
}

/// Signal-to-noise ratio `M kappa N_S / E'` (mean reflectivity for Rayleigh).
fn roc_snr(params: &ScenarioParams) -> f64 {
    let k = match params.reflectivity {
        Reflectivity::Fixed(k) => k,
        Reflectivity::Rayleigh(kb) => kb,
    };
    params.m as f64 * k * params.n_s / roc_noise(params)
}

/// `ln(1 - P_D)` at false-alarm probability `e^{log_pf}`.
fn log_miss(params: &ScenarioParams, snr: f64, log_pf: f64) -> f64 {
    match params.reflectivity {
        Reflectivity::Fixed(_) => {
            log_marcum_q_complement((2.0 * snr).sqrt(), (-2.0 * log_pf).sqrt())
        }
        Reflectivity::Rayleigh(_) => {
            let c = 1.0 / (1.0 + snr);
            (-(c * log_pf).exp_m1()).ln()
        }
    }
}

/// Detection probability at the given false-alarm probability.
pub fn roc_point(params: &ScenarioParams, p_false_alarm: f64) -> Result<RocPoint> {
    params.validate()?;
    if !(p_false_alarm > 0.0 && p_false_alarm < 1.0) {
        return Err(Error::domain(
            "roc_point",
            format!("p_false_alarm = {p_false_alarm} not in (0, 1)"),
        ));
    }
    let snr = roc_snr(params);
    let lm = log_miss(params, snr, p_false_alarm.ln());
    Ok(RocPoint {
        p_false_alarm,
        p_detection: -lm.exp_m1(),
    })
}

/// Classical error probability minimised over the detector's operating point.
pub fn ci_roc(params: &ScenarioParams) -> Result<DiscriminationResult> {
    params.validate()?;
    if roc_noise(params) == 0.0 {
        // noiseless return: photon counting with zero threshold is exact
        return ci_helstrom(params).map(|r| DiscriminationResult {
            method: Method::Roc,
            ..r
        });
    }
    let snr = roc_snr(params);
    let objective =
        |lpf: f64| log_add_exp(lpf, log_miss(params, snr, lpf)) - std::f64::consts::LN_2;

    let hi = -1e-12;
    let lo = -(2.0 * snr + 50.0);
    const SCAN: usize = 256;
    let step = (hi - lo) / SCAN as f64;
    let grid: Vec<f64> = (0..=SCAN).map(|i| lo + step * i as f64).collect();
    let values: Vec<f64> = grid.iter().map(|&x| objective(x)).collect();
    let best = (0..values.len())
        .min_by(|&a, &b| values[a].total_cmp(&values[b]))
        .unwrap_or(0);
    let a = grid[best.saturating_sub(1)];
    let b = grid[(best + 1).min(SCAN)];
    let (_, mut lp) = golden_section_min(objective, a, b, 1e-10 * (1.0 + a.abs()));
    lp = lp.min(values[best]).min(LogValue::HALF.log());
    Ok(DiscriminationResult::new(
        LogValue::from_log(lp),
        Method::Roc,
    ))
}

/// Entanglement lower bound `(1/4) exp(-beta M N_S)`.
pub fn ng_lower_bound(params: &ScenarioParams) -> Result<DiscriminationResult> {
    let kappa = params.fixed_kappa("ng_lower_bound")?;
    let beta = ng_beta(kappa, params.n_e);
    let lp = -(4.0f64).ln() - beta * params.m as f64 * params.n_s;
    Ok(DiscriminationResult::new(
        LogValue::from_log(lp),
        Method::Ng,
    ))
}

/// `-ln(1 - kappa / (N_E (1 - kappa) + 1))`.
pub fn ng_beta(kappa: f64, n_e: f64) -> f64 {
    -(-kappa / (n_e * (1.0 - kappa) + 1.0)).ln_1p()
}

/// `M_0 r^k`, rounded, for `k = 0..len`.
pub fn geometric_grid(m0: u64, ratio: f64, len: usize) -> Vec<u64> {
    (0..len)
        .map(|k| (m0 as f64 * ratio.powi(k as i32)).round() as u64)
        .collect()
}

/// Classical error exponent `-ln P_CI / M` along a geometric grid, stopped when
/// two successive points agree to 0.5%.
pub fn ci_error_exponent(params: &ScenarioParams, m_grid: &[u64]) -> Result<ExponentEstimate> {
    const OP: &str = "ci_error_exponent";
    params.validate()?;
    if m_grid.len() < 4 {
        return Err(Error::usage(OP, "grid needs at least 4 points"));
    }
    if m_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::usage(OP, "grid must be strictly increasing"));
    }
    let r0 = m_grid[1] as f64 / m_grid[0] as f64;
    let geometric = m_grid.windows(2).all(|w| {
        let r = w[1] as f64 / w[0] as f64;
        (r / r0 - 1.0).abs() < 1e-3 + 1.0 / w[0] as f64
    });
    if !geometric {
        return Err(Error::usage(OP, "grid must be geometric"));
    }
    converge_exponent(m_grid, 0.005, |m| {
        Ok(ci_helstrom(&params.with_m(m))?.log_p_error)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::quadrature::gauss_legendre;
    use crate::photon_stats::thermal_pmf;

    fn fixed(m: u64) -> ScenarioParams {
        ScenarioParams::fixed(0.001, 20.0, 0.01, m)
    }

    #[test]
    fn ng_values() {
        let beta = ng_beta(0.01, 20.0);
        assert!((beta - 4.80885e-4).abs() < 1e-9, "{beta}");
        let r = ng_lower_bound(&fixed(1_000_000)).unwrap();
        assert!((r.p_error() - 0.25 * (-beta * 1000.0).exp()).abs() < 1e-15);
        assert!((r.p_error() - 0.1546).abs() < 1e-4);
        let zero = ng_lower_bound(&ScenarioParams::fixed(0.001, 20.0, 0.0, 1_000_000_000)).unwrap();
        assert_eq!(zero.p_error(), 0.25);
    }

    #[test]
    fn ng_requires_fixed() {
        let p = ScenarioParams::rayleigh(0.001, 20.0, 0.01, 10);
        assert!(matches!(ng_lower_bound(&p), Err(Error::Usage { .. })));
    }

    #[test]
    fn no_return_is_chance() {
        for p in [
            ScenarioParams::fixed(0.001, 20.0, 0.0, 1000),
            ScenarioParams::fixed(0.0, 20.0, 0.0, 1000),
        ] {
            let lp = ci_helstrom(&p).unwrap().ln_p();
            assert!((lp + std::f64::consts::LN_2).abs() < 1e-13, "{lp}");
            assert!((ci_roc(&p).unwrap().ln_p() + std::f64::consts::LN_2).abs() < 1e-12);
        }
    }

    #[test]
    fn dark_source_sees_only_noise_drop() {
        // the target-present noise is (1 - kappa) N_E, so without signal the
        // Helstrom limit is that of two thermal states
        let p = ScenarioParams::fixed(0.0, 20.0, 0.01, 1000);
        let (a, b) = (
            thermal_pmf(20.0, 1e-18).unwrap(),
            thermal_pmf(19.8, 1e-18).unwrap(),
        );
        let expected = helstrom_diagonal(&a, &b).ln_p();
        assert!((ci_helstrom(&p).unwrap().ln_p() - expected).abs() < 1e-12);
        assert!(expected < -std::f64::consts::LN_2);
        // the ROC model has equal noise under both hypotheses
        assert!((ci_roc(&p).unwrap().ln_p() + std::f64::consts::LN_2).abs() < 1e-12);
        let r = ScenarioParams::rayleigh(0.0, 20.0, 0.01, 1000);
        assert!((ci_roc(&r).unwrap().ln_p() + std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn single_mode_perturbative() {
        // to first order in d2 = M kappa N_S the displaced state is
        // q_n = g_n (1 + d2 (n - E) / (E (1 + E))), g the thermal law of E
        let p = fixed(1);
        let d2 = 1e-5;
        let e: f64 = 0.99 * 20.0;
        let g = |n: i32| (e / (1.0 + e)).powi(n) / (1.0 + e);
        let thermal_ne = |n: i32| (20.0f64 / 21.0).powi(n) / 21.0;
        let mut pos = 0.0;
        for n in 0..4000 {
            let q = g(n) * (1.0 + d2 * (n as f64 - e) / (e * (1.0 + e)));
            let diff = thermal_ne(n) - q;
            if diff > 0.0 {
                pos += diff;
            }
        }
        let expected = 0.5 * (1.0 - pos);
        let got = ci_helstrom(&p).unwrap().p_error();
        assert!((got - expected).abs() < 1e-9, "{got} vs {expected}");
    }

    #[test]
    fn rayleigh_roc_matches_dense_grid() {
        for m in [1_000_000u64, 30_000_000, 100_000_000] {
            let p = ScenarioParams::rayleigh(0.001, 20.0, 0.01, m);
            let got = ci_roc(&p).unwrap().p_error();
            let snr = roc_snr(&p);
            let c = 1.0 / (1.0 + snr);
            let lo = -(2.0 * snr + 50.0);
            let best = (0..=100_000)
                .map(|i| {
                    let l = lo + (-1e-12 - lo) * i as f64 / 100_000.0;
                    0.5 * (l.exp() + 1.0 - (c * l).exp())
                })
                .fold(f64::INFINITY, f64::min);
            assert!(got <= best * (1.0 + 1e-10), "m={m}");
            // closed form optimum p_F = c^{1/(1-c)}
            let pf = c.powf(1.0 / (1.0 - c));
            let closed = 0.5 * (pf + 1.0 - pf.powf(c));
            assert!(
                (got / closed - 1.0).abs() < 1e-10,
                "m={m}: {got} vs {closed}"
            );
        }
    }

    #[test]
    fn fixed_roc_decreasing_in_m() {
        let mut prev = 0.5;
        for m in [100_000u64, 1_000_000, 10_000_000, 100_000_000] {
            let v = ci_roc(&fixed(m)).unwrap().p_error();
            assert!(v < prev, "m={m}");
            prev = v;
        }
    }

    #[test]
    fn roc_curves_concave() {
        for p in [
            fixed(10_000_000),
            ScenarioParams::rayleigh(0.001, 20.0, 0.01, 10_000_000),
        ] {
            let pts: Vec<RocPoint> = (1..=100)
                .map(|i| roc_point(&p, i as f64 / 101.0).unwrap())
                .collect();
            for w in pts.windows(3) {
                let slope1 = (w[1].p_detection - w[0].p_detection)
                    / (w[1].p_false_alarm - w[0].p_false_alarm);
                let slope2 = (w[2].p_detection - w[1].p_detection)
                    / (w[2].p_false_alarm - w[1].p_false_alarm);
                assert!(slope2 <= slope1 * (1.0 + 1e-9) + 1e-12);
            }
            assert!(pts.iter().all(|r| r.p_detection >= r.p_false_alarm));
        }
    }

    #[test]
    fn marcum_roc_by_quadrature() {
        // P_D = int_b^inf x exp(-(x^2+a^2)/2) I0(a x) dx with I0 from its integral form
        let p = fixed(2_000_000);
        let snr = roc_snr(&p);
        let a = (2.0 * snr).sqrt();
        let pf: f64 = 0.05;
        let b = (-2.0 * pf.ln()).sqrt();
        let theta = gauss_legendre(200, 0.0, std::f64::consts::PI).unwrap();
        let density = |x: f64| -> f64 {
            let i0s: f64 = theta
                .iter()
                .map(|&(t, w)| w * (a * x * (t.cos() - 1.0)).exp())
                .sum::<f64>()
                / std::f64::consts::PI;
            x * (-(x - a) * (x - a) / 2.0).exp() * i0s
        };
        let pd: f64 = gauss_legendre(400, b, a + b + 20.0)
            .unwrap()
            .iter()
            .map(|&(x, w)| w * density(x))
            .sum();
        let got = roc_point(&p, pf).unwrap().p_detection;
        assert!((got - pd).abs() < 1e-9, "{got} vs {pd}");
    }

    #[test]
    fn exponent_grid_validation() {
        let p = fixed(1);
        assert!(ci_error_exponent(&p, &[1, 2, 4]).is_err());
        assert!(ci_error_exponent(&p, &[1, 2, 3, 10]).is_err());
        assert_eq!(geometric_grid(1000, 2.0, 4), vec![1000, 2000, 4000, 8000]);
    }
}
