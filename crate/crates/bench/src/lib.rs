//! Scenarios shared by the benchmarks.

use qi_cd_core::ScenarioParams;

pub const N_S: f64 = 0.001;
pub const N_E: f64 = 20.0;
pub const KAPPA: f64 = 0.01;

pub fn fixed(m: u64) -> ScenarioParams {
    ScenarioParams::fixed(N_S, N_E, KAPPA, m)
}

pub fn rayleigh(m: u64) -> ScenarioParams {
    ScenarioParams::rayleigh(N_S, N_E, KAPPA, m)
}
