//! Reduced-size invariant checks over every module, timed per suite.
//!
//! Setting `QI_CD_SELFTEST_CORRUPT` to a suite name (or `suite/check`) forces
//! the matching checks to fail; it exists to exercise the failure path.

use std::f64::consts::{E, LN_2};
use std::time::Instant;

use qi_cd_core::baselines::{ci_helstrom, ci_roc, ng_beta, roc_point};
use qi_cd_core::cd_module::{pcd_exact, pcd_large_m, pcd_poisson_threshold, pcd_qcb};
use qi_cd_core::discrimination::{helstrom_diagonal, optimal_threshold, qcb_diagonal};
use qi_cd_core::fading::{rayleigh_achievable, rayleigh_lower_bound, rayleigh_quadrature};
use qi_cd_core::numerics::{
    gauss_legendre, lambert_w_minus1, log_marcum_q, log_marcum_q_complement,
};
use qi_cd_core::photon_stats::{phase_averaged_displaced_thermal_pmf, thermal_pmf};
use qi_cd_core::{idler_stats, ng_lower_bound, Result, ScenarioParams};

pub const CORRUPT_ENV: &str = "QI_CD_SELFTEST_CORRUPT";

const NS: f64 = 0.001;
const NE: f64 = 20.0;
const K: f64 = 0.01;

/// A measured error against its tolerance; passes when `error <= tol`.
struct Check {
    name: &'static str,
    error: f64,
    tol: f64,
}

fn check(name: &'static str, error: f64, tol: f64) -> Check {
    Check { name, error, tol }
}

fn holds(name: &'static str, ok: bool) -> Check {
    Check {
        name,
        error: if ok { 0.0 } else { 1.0 },
        tol: 0.0,
    }
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn fixed(m: u64) -> ScenarioParams {
    ScenarioParams::fixed(NS, NE, K, m)
}

fn numerics() -> Result<Vec<Check>> {
    let mut worst_w: f64 = 0.0;
    for x in [-0.3678, -0.2, -1e-3 / E, -1e-9] {
        let w = lambert_w_minus1(x)?;
        worst_w = worst_w.max(((w * w.exp()) / x - 1.0).abs());
    }
    let mut worst_q: f64 = 0.0;
    for (a, b) in [(0.5, 1.0), (3.0, 2.0), (10.0, 12.0)] {
        let total = log_marcum_q(a, b).exp() + log_marcum_q_complement(a, b).exp();
        worst_q = worst_q.max((total - 1.0).abs());
    }
    let q0 = rel(log_marcum_q(0.0, 2.0), -2.0);
    let gl: f64 = gauss_legendre(8, 0.0, 2.0)?
        .iter()
        .map(|(x, w)| w * x.powi(15))
        .sum();
    Ok(vec![
        check("lambert_residual", worst_w, 1e-13),
        check("marcum_complement_sum", worst_q, 1e-12),
        check("marcum_zero_amplitude", q0, 1e-13),
        check(
            "gauss_legendre_degree_15",
            rel(gl, 2f64.powi(16) / 16.0),
            1e-13,
        ),
    ])
}

fn photon_stats() -> Result<Vec<Check>> {
    let t = thermal_pmf(2.5, 1e-18)?;
    let d = phase_averaged_displaced_thermal_pmf(30.0, 1.5, 1e-18)?;
    Ok(vec![
        check("thermal_mass", (t.total_mass() - 1.0).abs(), 1e-14),
        check("thermal_mean", rel(t.mean(), 2.5), 1e-12),
        check("displaced_mass", (d.total_mass() - 1.0).abs(), 1e-14),
        check("displaced_mean", rel(d.mean(), 31.5), 1e-12),
    ])
}

fn discrimination() -> Result<Vec<Check>> {
    let mut asym: f64 = 0.0;
    let mut scan: f64 = 0.0;
    let mut order = true;
    for (d2, e) in [(0.5, 0.01), (5.0, 0.001), (40.0, 0.2)] {
        let p = thermal_pmf(e, 1e-18)?;
        let q = phase_averaged_displaced_thermal_pmf(d2, e, 1e-18)?;
        let h = helstrom_diagonal(&p, &q).ln_p();
        asym = asym.max((h - helstrom_diagonal(&q, &p).ln_p()).abs());
        scan = scan.max(rel(optimal_threshold(&p, &q).p_error(), h.exp()));
        order &= qcb_diagonal(&p, &q).ln_p() >= h && h <= -LN_2;
    }
    Ok(vec![
        check("helstrom_symmetric", asym, 1e-12),
        check("threshold_scan_equals_helstrom", scan, 1e-10),
        holds("qcb_above_helstrom", order),
    ])
}

fn cd_module() -> Result<Vec<Check>> {
    let mut dev: f64 = 0.0;
    let mut converged = true;
    let mut monotone = true;
    let mut prev = f64::INFINITY;
    for m in [1_000_000, 4_000_000, 16_000_000] {
        let exact = pcd_exact(&fixed(m))?;
        let large = pcd_large_m(&fixed(m))?;
        dev = dev.max(rel(large.p_error(), exact.result.p_error()));
        converged &= exact.quadrature.converged;
        monotone &= exact.result.ln_p() <= prev;
        prev = exact.result.ln_p();
    }
    let m = 10_000_000;
    let two_xi_m = 2.0 * idler_stats(&fixed(m), K)?.xi * m as f64;
    let kennedy = rel(
        pcd_poisson_threshold(&fixed(m), 0)?.ln_p(),
        -LN_2 - two_xi_m,
    );
    Ok(vec![
        check("exact_vs_large_m", dev, 5e-3),
        holds("exact_quadrature_converged", converged),
        holds("exact_non_increasing_in_m", monotone),
        check("kennedy_closed_form", kennedy, 1e-15),
    ])
}

fn baselines() -> Result<Vec<Check>> {
    let mut order = true;
    for m in [100_000, 10_000_000, 1_000_000_000] {
        let p = fixed(m);
        let pcd = pcd_large_m(&p)?.ln_p();
        order &= ng_lower_bound(&p)?.ln_p() <= pcd
            && pcd <= pcd_qcb(&p)?.ln_p()
            && pcd < ci_helstrom(&p)?.ln_p();
    }
    let chance = ci_roc(&ScenarioParams::fixed(0.0, NE, K, 1000))?.ln_p();
    // Rayleigh optimum: p_F = c^(1/(1-c)) with c = 1/(1+snr).
    let ray = ScenarioParams::rayleigh(NS, NE, K, 10_000_000);
    let snr = 10_000_000.0 * K * NS / ((1.0 - K) * NE);
    let c = 1.0 / (1.0 + snr);
    let pf = c.powf(1.0 / (1.0 - c));
    let pt = roc_point(&ray, pf)?;
    let closed = 0.5 * (pt.p_false_alarm + 1.0 - pt.p_detection);
    Ok(vec![
        check("ng_beta_value", rel(ng_beta(K, NE), 4.80885e-4), 1e-5),
        holds("ng_below_pcd_below_qcb_and_ci", order),
        check("roc_dark_source_is_chance", (chance + LN_2).abs(), 1e-12),
        check(
            "rayleigh_roc_closed_form",
            rel(ci_roc(&ray)?.p_error(), closed),
            1e-8,
        ),
    ])
}

fn fading() -> Result<Vec<Check>> {
    let quad = rayleigh_quadrature(K, 16)?;
    let wsum: f64 = quad.weights.iter().sum();
    let mut order = true;
    let mut converged = true;
    for m in [1_000_000, 100_000_000] {
        let p = ScenarioParams::rayleigh(NS, NE, K, m);
        let lb = rayleigh_lower_bound(&p)?;
        let ach = rayleigh_achievable(&p)?;
        order &=
            lb.result.ln_p() <= ach.result.ln_p() && ach.result.ln_p() < ci_helstrom(&p)?.ln_p();
        converged &= lb.quadrature.converged && ach.quadrature.converged;
    }
    Ok(vec![
        check("weights_normalised", (wsum - 1.0).abs(), 1e-12),
        check("mean_reflectivity", rel(quad.mean(), K), 1e-8),
        holds("lower_bound_below_achievable_below_ci", order),
        holds("quadrature_converged", converged),
    ])
}

pub struct SuiteReport {
    pub name: &'static str,
    pub millis: f64,
    pub failures: Vec<String>,
    pub checks: usize,
}

pub fn run() -> Vec<SuiteReport> {
    let corrupt = std::env::var(CORRUPT_ENV).ok();
    let suites: [(&'static str, fn() -> Result<Vec<Check>>); 6] = [
        ("numerics", numerics),
        ("photon_stats", photon_stats),
        ("discrimination", discrimination),
        ("cd_module", cd_module),
        ("baselines", baselines),
        ("fading", fading),
    ];
    suites
        .iter()
        .map(|&(name, suite)| {
            let start = Instant::now();
            let outcome = suite();
            let millis = start.elapsed().as_secs_f64() * 1e3;
            match outcome {
                Err(e) => SuiteReport {
                    name,
                    millis,
                    failures: vec![format!("error: {e}")],
                    checks: 0,
                },
                Ok(checks) => {
                    let failures = checks
                        .iter()
                        .filter_map(|c| {
                            let corrupted = corrupt
                                .as_deref()
                                .is_some_and(|t| t == name || t == format!("{name}/{}", c.name));
                            let tol = if corrupted { -1.0 } else { c.tol };
                            (!(c.error <= tol)).then(|| {
                                format!("{}: error {:.3e} > tol {:.1e}", c.name, c.error, tol)
                            })
                        })
                        .collect();
                    SuiteReport {
                        name,
                        millis,
                        failures,
                        checks: checks.len(),
                    }
                }
            }
        })
        .collect()
}
