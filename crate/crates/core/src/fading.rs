//! Rayleigh-fading targets: the reflectivity is exponentially distributed with
//! mean `kappa_bar`, truncated to `[0, 1]` and renormalised.
//!
//! The quadrature uses `kappa(u) = -kappa_bar ln(1 - u (1 - e^{-1/kappa_bar}))`,
//! under which the renormalised measure is uniform in `u`. The map has a
//! near-logarithmic endpoint at `u = 1` (the singularity sits only
//! `e^{-1/kappa_bar}` away), so the `u` interval is split into panels that
//! halve toward the endpoint, each carrying its own Gauss-Legendre rule. The
//! lower bound additionally splits panels where its integrand has kinks.

use crate::cd_module::{doubling, QuadratureReport, QuadratureResult};
use crate::discrimination::{helstrom_diagonal, optimal_threshold, DiscriminationResult, Method};
use crate::error::{Error, Result};
use crate::numerics::logspace::{LogAccumulator, LogValue};
use crate::numerics::quadrature::GaussLegendre;
use crate::numerics::NumericsConfig;
use crate::photon_stats::{
    hypothesis_pair, idler_stats, phase_averaged_displaced_thermal_pmf_with, thermal_pmf_with,
    CutoffRule, FockPmf, ScenarioParams,
};

/// Number of halving panels before the final one that ends at `u = 1`.
const HALVINGS: i32 = 30;

/// Nodes and weights over reflectivity.
#[derive(Debug, Clone, PartialEq)]
pub struct KappaQuadrature {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl KappaQuadrature {
    /// Degenerate rule: all mass at `kappa`.
    pub fn point(kappa: f64) -> Self {
        KappaQuadrature {
            nodes: vec![kappa],
            weights: vec![1.0],
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }

    pub fn mean(&self) -> f64 {
        self.iter().map(|(k, w)| k * w).sum()
    }
}

/// Truncated-exponential rule with `nodes_per_panel` Gauss-Legendre nodes on
/// each of the graded `u` panels (`31 * nodes_per_panel` nodes in total).
pub fn rayleigh_quadrature(kappa_bar: f64, nodes_per_panel: usize) -> Result<KappaQuadrature> {
    check_mean(kappa_bar)?;
    panel_rule(kappa_bar, nodes_per_panel, &graded_edges())
}

fn check_mean(kappa_bar: f64) -> Result<()> {
    if kappa_bar > 0.0 && kappa_bar < 1.0 {
        Ok(())
    } else {
        Err(Error::domain(
            "rayleigh_quadrature",
            format!("kappa_bar = {kappa_bar} not in (0, 1)"),
        ))
    }
}

/// Panel edges in `t = 1 - u`, descending from 1 to 0.
fn graded_edges() -> Vec<f64> {
    let mut edges: Vec<f64> = (0..=HALVINGS).map(|k| 0.5f64.powi(k)).collect();
    edges.push(0.0);
    edges
}

/// Reflectivity at `t = 1 - u`. Working in `t` keeps resolution near `u = 1`.
fn kappa_at(kappa_bar: f64, t: f64) -> f64 {
    // 1 - u (1 - e^{-1/kappa_bar}) = t + (1 - t) e^{-1/kappa_bar}
    let mass = -(-1.0 / kappa_bar).exp_m1();
    (-kappa_bar * (t * mass + (1.0 - mass)).ln()).clamp(0.0, 1.0)
}

fn panel_rule(kappa_bar: f64, nodes_per_panel: usize, edges: &[f64]) -> Result<KappaQuadrature> {
    let rule = GaussLegendre::new(nodes_per_panel)?;
    let cap = nodes_per_panel * (edges.len() - 1);
    let mut nodes = Vec::with_capacity(cap);
    let mut weights = Vec::with_capacity(cap);
    for w in edges.windows(2) {
        for (t, wt) in rule.on(w[1], w[0]) {
            nodes.push(kappa_at(kappa_bar, t));
            weights.push(wt);
        }
    }
    Ok(KappaQuadrature { nodes, weights })
}

/// Values of `t` at which the optimal counting threshold of the
/// fixed-reflectivity problem changes. The Helstrom error is only piecewise
/// smooth in the reflectivity, with kinks exactly there.
fn threshold_switches(
    params: &ScenarioParams,
    kappa_bar: f64,
    cfg: &NumericsConfig,
) -> Result<Vec<f64>> {
    const SAMPLES: usize = 16;
    let y = 2.0 * params.m as f64;
    let threshold = |t: f64| -> Result<usize> {
        let (p, q) = hypothesis_pair(params, kappa_at(kappa_bar, t), y, cfg.fock_tail_tol)?;
        Ok(optimal_threshold(&p, &q).optimal_threshold.unwrap_or(0))
    };
    // the innermost panel carries ~1e-9 of the mass and is left alone
    let edges = graded_edges();
    let mut ts = Vec::new();
    for w in edges[..edges.len() - 1].windows(2) {
        for i in 0..SAMPLES {
            ts.push(w[0] + (w[1] - w[0]) * i as f64 / SAMPLES as f64);
        }
    }
    ts.push(edges[edges.len() - 2]);
    let ns = ts
        .iter()
        .map(|&t| threshold(t))
        .collect::<Result<Vec<_>>>()?;

    let mut out = Vec::new();
    let mut stack: Vec<(f64, usize, f64, usize)> = ts
        .windows(2)
        .zip(ns.windows(2))
        .filter(|(_, n)| n[0] != n[1])
        .map(|(t, n)| (t[0], n[0], t[1], n[1]))
        .collect();
    while let Some((a, na, b, nb)) = stack.pop() {
        // a > b
        if a - b <= 1e-12 * a {
            out.push(0.5 * (a + b));
            continue;
        }
        let mid = 0.5 * (a + b);
        let nm = threshold(mid)?;
        if nm != na {
            stack.push((a, na, mid, nm));
        }
        if nm != nb {
            stack.push((mid, nm, b, nb));
        }
    }
    Ok(out)
}

/// Graded rule with extra panel edges at the threshold switches.
fn lower_bound_edges(
    params: &ScenarioParams,
    kappa_bar: f64,
    cfg: &NumericsConfig,
) -> Result<Vec<f64>> {
    let mut edges = graded_edges();
    edges.extend(threshold_switches(params, kappa_bar, cfg)?);
    edges.sort_by(|a, b| b.total_cmp(a));
    edges.dedup();
    Ok(edges)
}

/// Quadrature-based value with the usual doubling check, starting from
/// `cfg.kappa_nodes` per panel and allowing two doublings.
fn with_kappa_doubling<F>(
    kappa_bar: f64,
    cfg: &NumericsConfig,
    eval: F,
) -> Result<(f64, QuadratureReport)>
where
    F: Fn(&KappaQuadrature) -> Result<f64>,
{
    doubling(
        cfg.kappa_nodes,
        cfg.kappa_nodes * 4,
        cfg.quad_rel_tol,
        |n| eval(&rayleigh_quadrature(kappa_bar, n)?),
    )
}

/// Concavity lower bound: the reflectivity average of the fixed-reflectivity
/// large-M Helstrom error.
pub fn rayleigh_lower_bound(params: &ScenarioParams) -> Result<QuadratureResult> {
    rayleigh_lower_bound_with(params, &NumericsConfig::default())
}

pub fn rayleigh_lower_bound_with(
    params: &ScenarioParams,
    cfg: &NumericsConfig,
) -> Result<QuadratureResult> {
    let kb = params.rayleigh_mean("rayleigh_lower_bound")?;
    let edges = lower_bound_edges(params, kb, cfg)?;
    let (lp, quadrature) = doubling(
        cfg.kappa_nodes,
        cfg.kappa_nodes * 4,
        cfg.quad_rel_tol,
        |n| lower_bound_on(params, &panel_rule(kb, n, &edges)?, cfg),
    )?;
    Ok(QuadratureResult {
        result: DiscriminationResult::new(LogValue::from_log(lp), Method::Helstrom),
        quadrature,
    })
}

/// Lower bound on a caller-supplied reflectivity rule.
pub fn rayleigh_lower_bound_on(
    params: &ScenarioParams,
    quad: &KappaQuadrature,
) -> Result<DiscriminationResult> {
    params.rayleigh_mean("rayleigh_lower_bound")?;
    let lp = lower_bound_on(params, quad, &NumericsConfig::default())?;
    Ok(DiscriminationResult::new(
        LogValue::from_log(lp),
        Method::Helstrom,
    ))
}

fn lower_bound_on(
    params: &ScenarioParams,
    quad: &KappaQuadrature,
    cfg: &NumericsConfig,
) -> Result<f64> {
    let y = 2.0 * params.m as f64;
    let mut acc = LogAccumulator::new();
    for (kappa, w) in quad.iter() {
        let (p, q) = hypothesis_pair(params, kappa, y, cfg.fock_tail_tol)?;
        acc.add(w.ln() + helstrom_diagonal(&p, &q).ln_p());
    }
    Ok(acc.value().min(LogValue::HALF.log()))
}

/// Helstrom error between the idler thermal state and the reflectivity
/// mixture of conditional states at `y = 2M`.
pub fn rayleigh_achievable(params: &ScenarioParams) -> Result<QuadratureResult> {
    rayleigh_achievable_with(params, &NumericsConfig::default())
}

pub fn rayleigh_achievable_with(
    params: &ScenarioParams,
    cfg: &NumericsConfig,
) -> Result<QuadratureResult> {
    let kb = params.rayleigh_mean("rayleigh_achievable")?;
    let (lp, quadrature) =
        with_kappa_doubling(kb, cfg, |q| achievable_on(params, q, cfg).map(|r| r.ln_p()))?;
    Ok(QuadratureResult {
        result: DiscriminationResult::new(LogValue::from_log(lp), Method::Helstrom),
        quadrature,
    })
}

/// Achievable error on a caller-supplied reflectivity rule. Unlike the
/// defaulted entry points this accepts either reflectivity model, since the
/// rule itself carries the distribution.
pub fn rayleigh_achievable_on(
    params: &ScenarioParams,
    quad: &KappaQuadrature,
) -> Result<DiscriminationResult> {
    params.validate()?;
    achievable_on(params, quad, &NumericsConfig::default())
}

fn achievable_on(
    params: &ScenarioParams,
    quad: &KappaQuadrature,
    cfg: &NumericsConfig,
) -> Result<DiscriminationResult> {
    let y = 2.0 * params.m as f64;
    let rule = CutoffRule::new(cfg.fock_tail_tol);
    let components = quad
        .iter()
        .map(|(kappa, w)| {
            let s = idler_stats(params, kappa)?;
            Ok((
                w,
                phase_averaged_displaced_thermal_pmf_with(s.xi * y, s.e_kappa, &rule)?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let mix = FockPmf::mixture(&components);
    let thermal = thermal_pmf_with(params.n_s, &rule.at_least(mix.cutoff()))?;
    Ok(helstrom_diagonal(&thermal, &mix))
}

/// Reflectivity mixture of target-present states, with weights from `quad`.
/// Each component is extended to at least `min_cutoff`.
pub(crate) fn mixture_pmf<F>(
    quad: &KappaQuadrature,
    rule: &CutoffRule,
    component: F,
) -> Result<FockPmf>
where
    F: Fn(f64, &CutoffRule) -> Result<FockPmf>,
{
    let components = quad
        .iter()
        .map(|(k, w)| Ok((w, component(k, rule)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(FockPmf::mixture(&components))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cd_module::pcd_large_m;

    fn truncated_mean(kb: f64) -> f64 {
        let e = (-1.0 / kb).exp();
        kb * (1.0 - (1.0 / kb + 1.0) * e) / (1.0 - e)
    }

    #[test]
    fn weights_normalised() {
        for kb in [0.001, 0.01, 0.1, 0.5] {
            let q = rayleigh_quadrature(kb, 16).unwrap();
            let s: f64 = q.weights.iter().sum();
            assert!((s - 1.0).abs() < 1e-12, "kb={kb}: {s}");
            assert!(q.nodes.iter().all(|k| (0.0..=1.0).contains(k)));
        }
    }

    #[test]
    fn mean_matches_truncated_exponential() {
        for kb in [0.001, 0.01, 0.05, 0.1] {
            let q = rayleigh_quadrature(kb, 16).unwrap();
            let rel = (q.mean() / truncated_mean(kb) - 1.0).abs();
            assert!(rel < 1e-8, "kb={kb}: {rel:e}");
        }
    }

    #[test]
    fn second_moment() {
        let kb: f64 = 0.3;
        let e = (-1.0 / kb).exp();
        // int_0^1 k^2 e^{-k/kb} dk / kb / (1 - e)
        let exact = (2.0 * kb * kb - e * (1.0 + 2.0 * kb + 2.0 * kb * kb)) / (1.0 - e);
        let q = rayleigh_quadrature(kb, 16).unwrap();
        let m2: f64 = q.iter().map(|(k, w)| w * k * k).sum();
        assert!((m2 / exact - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_mean() {
        assert!(rayleigh_quadrature(0.0, 8).is_err());
        assert!(rayleigh_quadrature(1.0, 8).is_err());
        assert!(rayleigh_quadrature(0.1, 0).is_err());
    }

    #[test]
    fn fixed_model_is_usage_error() {
        let p = ScenarioParams::fixed(0.001, 20.0, 0.01, 1000);
        assert!(matches!(rayleigh_lower_bound(&p), Err(Error::Usage { .. })));
        assert!(matches!(rayleigh_achievable(&p), Err(Error::Usage { .. })));
    }

    #[test]
    fn point_rule_reduces_to_fixed_reflectivity() {
        let m = 10_000_000;
        let r = ScenarioParams::rayleigh(0.001, 20.0, 0.01, m);
        let f = ScenarioParams::fixed(0.001, 20.0, 0.01, m);
        let q = KappaQuadrature::point(0.01);
        let a = rayleigh_achievable_on(&r, &q).unwrap();
        let l = rayleigh_lower_bound_on(&r, &q).unwrap();
        let fixed = pcd_large_m(&f).unwrap();
        assert!((a.ln_p() - fixed.ln_p()).abs() < 1e-12);
        assert!((l.ln_p() - fixed.ln_p()).abs() < 1e-12);
    }

    #[test]
    fn bound_ordering() {
        for m in [1_000_000u64, 10_000_000, 100_000_000] {
            let p = ScenarioParams::rayleigh(0.001, 20.0, 0.01, m);
            let lb = rayleigh_lower_bound(&p).unwrap();
            let ach = rayleigh_achievable(&p).unwrap();
            assert!(lb.quadrature.converged && ach.quadrature.converged);
            assert!(lb.result.ln_p() <= ach.result.ln_p(), "m={m}");
        }
    }
}
