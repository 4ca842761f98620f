//! Quantities a sweep can tabulate, their CSV columns and their evaluation
//! at a single mode count.

use serde::{Deserialize, Serialize};

use qi_cd_core::baselines::ci_helstrom_with;
use qi_cd_core::cd_module::{pcd_exact_with, pcd_large_m_with, pcd_qcb, QuadratureResult};
use qi_cd_core::fading::{rayleigh_achievable_with, rayleigh_lower_bound_with};
use qi_cd_core::{asymptotics, ci_roc, finite_exponent, ng_lower_bound, LogValue, NumericsConfig};

use crate::config::{Model, Scenario};
use crate::csv_out::fmt_f64;
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    PcdExact,
    #[serde(alias = "pcd_largeM")]
    PcdLargeM,
    PcdAsy,
    Threshold,
    Qcb,
    Ng,
    CiHelstrom,
    CiRoc,
    RayleighLb,
    RayleighAchievable,
    Exponents,
}

impl Quantity {
    pub fn name(self) -> &'static str {
        match self {
            Quantity::PcdExact => "pcd_exact",
            Quantity::PcdLargeM => "pcd_large_m",
            Quantity::PcdAsy => "pcd_asy",
            Quantity::Threshold => "threshold",
            Quantity::Qcb => "qcb",
            Quantity::Ng => "ng",
            Quantity::CiHelstrom => "ci_helstrom",
            Quantity::CiRoc => "ci_roc",
            Quantity::RayleighLb => "rayleigh_lb",
            Quantity::RayleighAchievable => "rayleigh_achievable",
            Quantity::Exponents => "exponents",
        }
    }

    /// The reflectivity model the quantity needs, `None` if either works.
    pub fn required_model(self) -> Option<Model> {
        match self {
            Quantity::PcdExact
            | Quantity::PcdLargeM
            | Quantity::PcdAsy
            | Quantity::Threshold
            | Quantity::Qcb
            | Quantity::Ng => Some(Model::Fixed),
            Quantity::RayleighLb | Quantity::RayleighAchievable => Some(Model::Rayleigh),
            Quantity::CiHelstrom | Quantity::CiRoc | Quantity::Exponents => None,
        }
    }

    fn is_probability(self) -> bool {
        !matches!(self, Quantity::Threshold | Quantity::Exponents)
    }

    fn has_quadrature(self) -> bool {
        matches!(
            self,
            Quantity::PcdExact | Quantity::RayleighLb | Quantity::RayleighAchievable
        )
    }
}

/// A validated set of quantities for one reflectivity model.
#[derive(Debug, Clone)]
pub struct Plan {
    pub quantities: Vec<Quantity>,
    pub model: Model,
    pub linear: bool,
}

impl Plan {
    pub fn new(quantities: &[Quantity], model: Model, linear: bool) -> CliResult<Plan> {
        if quantities.is_empty() {
            return Err(CliError::validation(
                "quantities: empty set, nothing to compute",
            ));
        }
        let mut qs = quantities.to_vec();
        qs.sort();
        qs.dedup();
        let problems: Vec<String> = qs
            .iter()
            .filter_map(|q| match q.required_model() {
                Some(req) if req != model => Some(format!(
                    "{}: requires the {} model, scenario is {}",
                    q.name(),
                    req.name(),
                    model.name()
                )),
                _ => None,
            })
            .collect();
        if !problems.is_empty() {
            return Err(CliError::validation(problems.join("; ")));
        }
        if qs.contains(&Quantity::Exponents) && !qs.iter().any(|q| q.is_probability()) {
            return Err(CliError::validation(
                "exponents: needs at least one probability quantity",
            ));
        }
        Ok(Plan {
            quantities: qs,
            model,
            linear,
        })
    }

    fn exponents(&self) -> bool {
        self.quantities.contains(&Quantity::Exponents)
    }

    pub fn columns(&self) -> Vec<String> {
        let mut cols = vec!["m".to_string()];
        for &q in &self.quantities {
            if q == Quantity::Threshold {
                cols.push("threshold".into());
            }
            if !q.is_probability() {
                continue;
            }
            let n = q.name();
            cols.push(format!("log_{n}"));
            if self.linear {
                cols.push(format!("p_{n}"));
            }
            if self.exponents() {
                cols.push(format!("r_{n}"));
            }
            if q.has_quadrature() {
                cols.push(format!("{n}_nodes"));
                cols.push(format!("{n}_converged"));
            }
        }
        if self.exponents() && self.model == Model::Fixed {
            cols.push("r_asy".into());
        }
        cols
    }

    /// One CSV row and whether every quadrature in it converged.
    pub fn evaluate(
        &self,
        scenario: &Scenario,
        m: u64,
        cfg: &NumericsConfig,
    ) -> CliResult<(Vec<String>, bool)> {
        let p = scenario.params(self.model, m);
        let mut row = vec![m.to_string()];
        let mut converged = true;
        let large = if self
            .quantities
            .iter()
            .any(|q| matches!(q, Quantity::PcdLargeM | Quantity::Threshold))
        {
            Some(pcd_large_m_with(&p, cfg)?)
        } else {
            None
        };
        for &q in &self.quantities {
            let mut quad: Option<QuadratureResult> = None;
            let log_p: Option<LogValue> = match q {
                Quantity::Threshold => {
                    let n = large
                        .as_ref()
                        .and_then(|r| r.optimal_threshold)
                        .expect("threshold from large-M pair");
                    row.push(n.to_string());
                    continue;
                }
                Quantity::Exponents => continue,
                Quantity::PcdExact => {
                    quad = Some(pcd_exact_with(&p, cfg)?);
                    quad.map(|r| r.result.log_p_error)
                }
                Quantity::PcdLargeM => large.map(|r| r.log_p_error),
                // The Stirling asymptote is meaningless once it exceeds 1/2.
                Quantity::PcdAsy => {
                    Some(asymptotics(&p, m)?.log_p_asy).filter(|l| *l <= LogValue::HALF)
                }
                Quantity::Qcb => Some(pcd_qcb(&p)?.log_p_error),
                Quantity::Ng => Some(ng_lower_bound(&p)?.log_p_error),
                Quantity::CiHelstrom => Some(ci_helstrom_with(&p, cfg)?.log_p_error),
                Quantity::CiRoc => Some(ci_roc(&p)?.log_p_error),
                Quantity::RayleighLb => {
                    quad = Some(rayleigh_lower_bound_with(&p, cfg)?);
                    quad.map(|r| r.result.log_p_error)
                }
                Quantity::RayleighAchievable => {
                    quad = Some(rayleigh_achievable_with(&p, cfg)?);
                    quad.map(|r| r.result.log_p_error)
                }
            };
            row.push(log_p.map(|l| fmt_f64(l.log())).unwrap_or_default());
            if self.linear {
                let lin = log_p
                    .filter(|l| l.is_zero() || l.linear() > 0.0)
                    .map(|l| fmt_f64(l.linear()));
                row.push(lin.unwrap_or_default());
            }
            if self.exponents() {
                row.push(
                    log_p
                        .map(|l| fmt_f64(finite_exponent(l, m)))
                        .unwrap_or_default(),
                );
            }
            if let Some(r) = quad {
                row.push(r.quadrature.nodes.to_string());
                row.push(r.quadrature.converged.to_string());
                converged &= r.quadrature.converged;
            }
        }
        if self.exponents() && self.model == Model::Fixed {
            row.push(
                asymptotics(&p, m)
                    .map(|a| fmt_f64(a.r_asy))
                    .unwrap_or_default(),
            );
        }
        Ok((row, converged))
    }
}
