//! Scalar special functions and log-domain arithmetic.
//!
//! Error probabilities in this crate routinely fall below the smallest
//! positive `f64`, so every probability is carried as a natural logarithm
//! and combined with the helpers in [`logspace`].

pub mod gamma;
pub mod golden;
pub mod laguerre;
pub mod lambert;
pub mod logspace;
pub mod marcum;
pub mod quadrature;

pub use gamma::{chi2_log_pdf, ln_gamma, poisson_log_pmf};
pub use golden::golden_section_min;
pub use laguerre::{log_laguerre_1f1, LaguerreNegRatios};
pub use lambert::lambert_w_minus1;
pub use logspace::{log_add_exp, log_diff_exp, log_sum_exp, LogAccumulator, LogValue};
pub use marcum::{log_marcum_q, log_marcum_q_complement, marcum_q};
pub use quadrature::{gauss_legendre, GaussLegendre};

use serde::{Deserialize, Serialize};

/// Tolerances shared by the series, truncation and quadrature routines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NumericsConfig {
    /// Additive termination tolerance for probability series.
    pub series_tol: f64,
    /// Certified bound on the probability mass dropped by a Fock cutoff.
    pub fock_tail_tol: f64,
    /// Relative change between successive node doublings that counts as converged.
    pub quad_rel_tol: f64,
    /// Gauss-Legendre node count of the first level in the chi-square average.
    pub quad_start_nodes: usize,
    /// Node count beyond which doubling stops and non-convergence is reported.
    pub quad_max_nodes: usize,
    /// Gauss-Legendre nodes per graded panel at the first level of the
    /// reflectivity quadrature.
    pub kappa_nodes: usize,
    /// Bracket width at which golden-section searches over `s` stop.
    pub golden_tol: f64,
}

impl Default for NumericsConfig {
    fn default() -> Self {
        NumericsConfig {
            series_tol: 1e-15,
            fock_tail_tol: 1e-18,
            quad_rel_tol: 1e-6,
            quad_start_nodes: 64,
            quad_max_nodes: 8192,
            kappa_nodes: 16,
            golden_tol: 1e-8,
        }
    }
}
