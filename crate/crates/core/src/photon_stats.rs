//! Scenario parameters, conditional idler statistics and the photon-number
//! distributions of the combined idler mode.
//!
//! With a uniformly random return phase the combined idler is a
//! phase-averaged displaced thermal state, which is diagonal in the number
//! basis. Its distribution is
//!
//! ```text
//! p_n = E^n / (1+E)^(n+1) * exp(-d2 / E) * 1F1~[n+1, 1, d2 / (E (1+E))]
//! ```
//!
//! with `d2 = |mu_kappa x|^2` the displacement energy and `E` the conditional
//! thermal photon number. All distributions are stored as log-probabilities
//! with a certified bound on the truncated tail.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::laguerre::LaguerreNegRatios;
use crate::numerics::logspace::{log_add_exp, LogAccumulator};
use crate::numerics::poisson_log_pmf;

/// Below this thermal photon number the displaced thermal state is treated as
/// coherent (Poisson statistics).
pub const COHERENT_LIMIT: f64 = 1e-12;

const MAX_FOCK_LEN: usize = 1 << 28;

/// Target reflectivity model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reflectivity {
    /// Known reflectivity `kappa` in `[0, 1]`.
    Fixed(f64),
    /// Exponentially distributed reflectivity (Rayleigh amplitude) with mean
    /// `kappa_bar`, truncated to `[0, 1]`.
    Rayleigh(f64),
}

/// Return-phase model. Only the uniform phase is analysed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseModel {
    #[default]
    Uniform,
}

/// Physical scenario: source brightness, background, reflectivity, phase
/// model and the number of signal-idler mode pairs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioParams {
    pub n_s: f64,
    pub n_e: f64,
    pub reflectivity: Reflectivity,
    #[serde(default)]
    pub phase: PhaseModel,
    pub m: u64,
}

impl ScenarioParams {
    pub fn fixed(n_s: f64, n_e: f64, kappa: f64, m: u64) -> Self {
        ScenarioParams {
            n_s,
            n_e,
            reflectivity: Reflectivity::Fixed(kappa),
            phase: PhaseModel::Uniform,
            m,
        }
    }

    pub fn rayleigh(n_s: f64, n_e: f64, kappa_bar: f64, m: u64) -> Self {
        ScenarioParams {
            n_s,
            n_e,
            reflectivity: Reflectivity::Rayleigh(kappa_bar),
            phase: PhaseModel::Uniform,
            m,
        }
    }

    pub fn with_m(self, m: u64) -> Self {
        ScenarioParams { m, ..self }
    }

    /// `n_s = 0` is accepted as the degenerate no-signal scenario.
    pub fn validate(&self) -> Result<()> {
        const OP: &str = "ScenarioParams";
        if !(self.n_s >= 0.0) || !self.n_s.is_finite() {
            return Err(Error::domain(
                OP,
                format!("n_s = {} must be >= 0", self.n_s),
            ));
        }
        if !(self.n_e >= 0.0) || !self.n_e.is_finite() {
            return Err(Error::domain(
                OP,
                format!("n_e = {} must be >= 0", self.n_e),
            ));
        }
        match self.reflectivity {
            Reflectivity::Fixed(k) if !(0.0..=1.0).contains(&k) => {
                Err(Error::domain(OP, format!("kappa = {k} not in [0, 1]")))
            }
            Reflectivity::Rayleigh(kb) if !(kb > 0.0 && kb < 1.0) => {
                Err(Error::domain(OP, format!("kappa_bar = {kb} not in (0, 1)")))
            }
            _ if self.m == 0 => Err(Error::domain(OP, "m must be >= 1")),
            _ => Ok(()),
        }
    }

    /// The known reflectivity, or a usage error for the Rayleigh model.
    pub fn fixed_kappa(&self, op: &'static str) -> Result<f64> {
        self.validate()?;
        match self.reflectivity {
            Reflectivity::Fixed(k) => Ok(k),
            Reflectivity::Rayleigh(_) => Err(Error::usage(
                op,
                "requires a fixed reflectivity; use the fading module for Rayleigh targets",
            )),
        }
    }

    pub fn rayleigh_mean(&self, op: &'static str) -> Result<f64> {
        self.validate()?;
        match self.reflectivity {
            Reflectivity::Rayleigh(kb) => Ok(kb),
            Reflectivity::Fixed(_) => {
                Err(Error::usage(op, "requires the Rayleigh reflectivity model"))
            }
        }
    }
}

/// Per-reflectivity quantities of the heterodyne-conditioned idler.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionalIdlerStats {
    /// Displacement gain `mu_kappa`.
    pub mu: f64,
    /// Conditional thermal photon number `E_kappa`.
    pub e_kappa: f64,
    /// Per-quadrature heterodyne variance; `2 sigma2 = kappa N_S + (1-kappa) N_E + 1`.
    pub sigma2: f64,
    /// `mu^2 sigma2`.
    pub xi: f64,
    /// Cross-correlation amplitude `sqrt(kappa N_S (N_S + 1))`.
    pub c_p: f64,
}

pub fn idler_stats(params: &ScenarioParams, kappa: f64) -> Result<ConditionalIdlerStats> {
    if !(0.0..=1.0).contains(&kappa) {
        return Err(Error::domain(
            "idler_stats",
            format!("kappa = {kappa} not in [0, 1]"),
        ));
    }
    let (ns, ne) = (params.n_s, params.n_e);
    let denom = kappa * ns + (1.0 - kappa) * ne + 1.0;
    let c_p = (kappa * ns * (ns + 1.0)).sqrt();
    let mu = c_p / denom;
    let sigma2 = 0.5 * denom;
    Ok(ConditionalIdlerStats {
        mu,
        e_kappa: (1.0 - kappa) * (1.0 + ne) * ns / denom,
        sigma2,
        xi: mu * mu * sigma2,
        c_p,
    })
}

/// Truncation rule for a Fock distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffRule {
    /// Upper bound on the omitted tail mass.
    pub tail_tol: f64,
    /// Never stop before this photon number.
    pub min_cutoff: usize,
}

impl CutoffRule {
    pub fn new(tail_tol: f64) -> Self {
        CutoffRule {
            tail_tol,
            min_cutoff: 0,
        }
    }

    pub fn at_least(self, min_cutoff: usize) -> Self {
        CutoffRule { min_cutoff, ..self }
    }
}

/// Truncated photon-number distribution in log domain.
#[derive(Debug, Clone, PartialEq)]
pub struct FockPmf {
    log_probs: Vec<f64>,
    log_tail_bound: f64,
}

impl FockPmf {
    pub fn from_log_probs(log_probs: Vec<f64>, log_tail_bound: f64) -> Self {
        assert!(
            !log_probs.is_empty(),
            "a Fock distribution needs at least the vacuum entry"
        );
        FockPmf {
            log_probs,
            log_tail_bound,
        }
    }

    /// Number state `|n>`.
    pub fn number_state(n: usize) -> Self {
        let mut lp = vec![f64::NEG_INFINITY; n + 1];
        lp[n] = 0.0;
        FockPmf {
            log_probs: lp,
            log_tail_bound: f64::NEG_INFINITY,
        }
    }

    pub fn cutoff(&self) -> usize {
        self.log_probs.len() - 1
    }

    pub fn len(&self) -> usize {
        self.log_probs.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn log_probs(&self) -> &[f64] {
        &self.log_probs
    }

    /// `-inf` beyond the cutoff.
    pub fn log_prob(&self, n: usize) -> f64 {
        self.log_probs.get(n).copied().unwrap_or(f64::NEG_INFINITY)
    }

    pub fn prob(&self, n: usize) -> f64 {
        self.log_prob(n).exp()
    }

    pub fn log_tail_bound(&self) -> f64 {
        self.log_tail_bound
    }

    pub fn tail_bound(&self) -> f64 {
        self.log_tail_bound.exp()
    }

    pub fn log_total_mass(&self) -> f64 {
        self.log_probs
            .iter()
            .copied()
            .collect::<LogAccumulator>()
            .value()
    }

    pub fn total_mass(&self) -> f64 {
        self.log_total_mass().exp()
    }

    pub fn mean(&self) -> f64 {
        self.log_probs
            .iter()
            .enumerate()
            .map(|(n, lp)| n as f64 * lp.exp())
            .sum()
    }

    /// Weighted mixture `sum_i w_i p_i` on the union of the component supports.
    /// Weights are linear and need not be normalised.
    pub fn mixture(components: &[(f64, FockPmf)]) -> FockPmf {
        assert!(!components.is_empty(), "mixture of zero components");
        let len = components.iter().map(|(_, p)| p.len()).max().unwrap_or(1);
        let mut acc = vec![LogAccumulator::new(); len];
        let mut tail = f64::NEG_INFINITY;
        // fixed component order keeps the reduction bitwise reproducible
        for (w, p) in components {
            let lw = w.ln();
            for (slot, &lp) in acc.iter_mut().zip(&p.log_probs) {
                slot.add(lw + lp);
            }
            tail = log_add_exp(tail, lw + p.log_tail_bound);
        }
        FockPmf {
            log_probs: acc.iter().map(LogAccumulator::value).collect(),
            log_tail_bound: tail,
        }
    }
}

/// Pulls log-probabilities from `terms` until both the starting index and the
/// tail criterion are met. The tail bound is the geometric bound
/// `p_N rho / (1 - rho)` with `rho = p_{N+1} / p_N`, which is an upper bound
/// for log-concave distributions past their mode (all distributions built
/// here are log-concave).
fn truncate(terms: impl Iterator<Item = f64>, start: usize, rule: &CutoffRule) -> Result<FockPmf> {
    let stop_from = start.max(rule.min_cutoff);
    let log_tol = rule.tail_tol.ln();
    let mut out: Vec<f64> = Vec::with_capacity(stop_from + 2);
    for t in terms {
        out.push(t);
        let len = out.len();
        if len < 2 || len - 2 < stop_from {
            if len > MAX_FOCK_LEN {
                break;
            }
            continue;
        }
        let (cur, next) = (out[len - 2], out[len - 1]);
        let log_tail = if next == f64::NEG_INFINITY {
            Some(f64::NEG_INFINITY)
        } else {
            let lr = next - cur;
            if lr < 0.0 {
                Some(next - (-lr.exp_m1()).ln())
            } else {
                None
            }
        };
        if let Some(lt) = log_tail {
            if lt < log_tol {
                out.pop();
                return Ok(FockPmf {
                    log_probs: out,
                    log_tail_bound: lt,
                });
            }
        }
        if len > MAX_FOCK_LEN {
            break;
        }
    }
    Err(Error::non_convergence(
        "fock cutoff",
        format!("tail above {} after {} terms", rule.tail_tol, out.len()),
    ))
}

fn start_index(mean: f64, variance: f64) -> usize {
    (mean + 12.0 * variance.sqrt()).ceil() as usize
}

fn check_tail_tol(op: &'static str, tol: f64) -> Result<()> {
    if tol > 0.0 && tol < 1.0 {
        Ok(())
    } else {
        Err(Error::usage(
            op,
            format!("cutoff tolerance {tol} not in (0, 1)"),
        ))
    }
}

/// Thermal (geometric) distribution with mean `n_mean`.
pub fn thermal_pmf(n_mean: f64, cutoff_tol: f64) -> Result<FockPmf> {
    thermal_pmf_with(n_mean, &CutoffRule::new(cutoff_tol))
}

pub fn thermal_pmf_with(n_mean: f64, rule: &CutoffRule) -> Result<FockPmf> {
    if !(n_mean >= 0.0) || !n_mean.is_finite() {
        return Err(Error::domain(
            "thermal_pmf",
            format!("n_mean = {n_mean} must be >= 0"),
        ));
    }
    check_tail_tol("thermal_pmf", rule.tail_tol)?;
    let c0 = -n_mean.ln_1p();
    let lr = n_mean.ln() - n_mean.ln_1p();
    let terms = (0u64..).map(move |n| if n == 0 { c0 } else { c0 + n as f64 * lr });
    truncate(terms, start_index(n_mean, n_mean * (n_mean + 1.0)), rule)
}

/// Photon-number distribution of a displaced thermal state with displacement
/// energy `d2` and thermal photon number `e_mean`, averaged over a uniform
/// phase. Falls back to Poisson(`d2`) when `e_mean < 1e-12`.
pub fn phase_averaged_displaced_thermal_pmf(
    d2: f64,
    e_mean: f64,
    cutoff_tol: f64,
) -> Result<FockPmf> {
    phase_averaged_displaced_thermal_pmf_with(d2, e_mean, &CutoffRule::new(cutoff_tol))
}

pub fn phase_averaged_displaced_thermal_pmf_with(
    d2: f64,
    e_mean: f64,
    rule: &CutoffRule,
) -> Result<FockPmf> {
    const OP: &str = "phase_averaged_displaced_thermal_pmf";
    if !(d2 >= 0.0) || !d2.is_finite() {
        return Err(Error::domain(OP, format!("d2 = {d2} must be >= 0")));
    }
    if !(e_mean >= 0.0) || !e_mean.is_finite() {
        return Err(Error::domain(OP, format!("e_mean = {e_mean} must be >= 0")));
    }
    check_tail_tol(OP, rule.tail_tol)?;

    let mean = d2 + e_mean;
    let variance = e_mean * (1.0 + e_mean) + d2 * (1.0 + 2.0 * e_mean);
    let start = start_index(mean, variance);

    if e_mean < COHERENT_LIMIT {
        let terms = (0u64..).map(move |n| poisson_log_pmf(n as f64, d2));
        return truncate(terms, start, rule);
    }

    let c0 = -e_mean.ln_1p() - d2 / (1.0 + e_mean);
    let lr = e_mean.ln() - e_mean.ln_1p();
    let z = d2 / (e_mean * (1.0 + e_mean));
    let laguerre = LaguerreNegRatios::new(z)?;
    let terms = laguerre.enumerate().map(move |(n, log_l)| {
        if n == 0 {
            c0 + log_l
        } else {
            c0 + n as f64 * lr + log_l
        }
    });
    truncate(terms, start, rule)
}

/// Builds two distributions on a common index range: the narrower one is
/// extended to the cutoff of the wider.
pub fn aligned_pair(
    a: impl Fn(&CutoffRule) -> Result<FockPmf>,
    b: impl Fn(&CutoffRule) -> Result<FockPmf>,
    tail_tol: f64,
) -> Result<(FockPmf, FockPmf)> {
    let rule = CutoffRule::new(tail_tol);
    let pa = a(&rule)?;
    let pb = b(&rule)?;
    match pa.cutoff().cmp(&pb.cutoff()) {
        std::cmp::Ordering::Equal => Ok((pa, pb)),
        std::cmp::Ordering::Less => Ok((a(&rule.at_least(pb.cutoff()))?, pb)),
        std::cmp::Ordering::Greater => {
            let pb = b(&rule.at_least(pa.cutoff()))?;
            Ok((pa, pb))
        }
    }
}

/// Target-absent idler thermal state and the conditional target-present state
/// for reflectivity `kappa` and heterodyne variable `y`, aligned.
pub fn hypothesis_pair(
    params: &ScenarioParams,
    kappa: f64,
    y: f64,
    tail_tol: f64,
) -> Result<(FockPmf, FockPmf)> {
    let stats = idler_stats(params, kappa)?;
    let d2 = stats.xi * y;
    aligned_pair(
        |r| thermal_pmf_with(params.n_s, r),
        |r| phase_averaged_displaced_thermal_pmf_with(d2, stats.e_kappa, r),
        tail_tol,
    )
}

/// `gamma_{n,kappa}(y)`: thermal minus conditional displaced-thermal
/// probability of `n` photons. Signed, so computed in linear domain.
pub fn gamma_n(n: usize, y: f64, params: &ScenarioParams, kappa: f64) -> Result<f64> {
    if !(y >= 0.0) {
        return Err(Error::domain("gamma_n", format!("y = {y} must be >= 0")));
    }
    let stats = idler_stats(params, kappa)?;
    let rule = CutoffRule::new(1e-18).at_least(n);
    let p = thermal_pmf_with(params.n_s, &rule)?;
    let q = phase_averaged_displaced_thermal_pmf_with(stats.xi * y, stats.e_kappa, &rule)?;
    Ok(p.prob(n) - q.prob(n))
}
