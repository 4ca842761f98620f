//! Error-probability evaluation for entanglement-assisted target detection
//! with a correlation-to-displacement receiver.
//!
//! The crate is organised bottom-up:
//!
//! - [`numerics`]: log-domain arithmetic and the special functions everything
//!   else is built on.
//! - [`photon_stats`]: scenario parameters, conditional idler statistics and
//!   the photon-number distributions of the two hypotheses.
//! - [`discrimination`]: Helstrom limit, threshold receivers and the quantum
//!   Chernoff bound for number-diagonal states.
//! - [`cd_module`]: exact, large-M, Poisson and asymptotic error
//!   probabilities of the conversion receiver for a known reflectivity.
//! - [`baselines`]: classical-illumination benchmarks and the entanglement
//!   lower bound.
//! - [`fading`]: Rayleigh-distributed reflectivity.

pub mod baselines;
pub mod cd_module;
pub mod discrimination;
pub mod error;
pub mod fading;
pub mod numerics;
pub mod photon_stats;

pub use baselines::{ci_error_exponent, ci_helstrom, ci_roc, ng_lower_bound, RocPoint};
pub use cd_module::{
    asymptotics, finite_exponent, pcd_exact, pcd_large_m, pcd_poisson_threshold,
    AsymptoticQuantities, ExponentEstimate, QuadratureReport,
};
pub use discrimination::{
    helstrom_diagonal, optimal_threshold, qcb_diagonal, threshold_error, DiscriminationResult,
    Method,
};
pub use error::{Error, Result};
pub use fading::{rayleigh_achievable, rayleigh_lower_bound, rayleigh_quadrature, KappaQuadrature};
pub use numerics::{LogValue, NumericsConfig};
pub use photon_stats::{
    idler_stats, phase_averaged_displaced_thermal_pmf, thermal_pmf, ConditionalIdlerStats, FockPmf,
    PhaseModel, Reflectivity, ScenarioParams,
};
