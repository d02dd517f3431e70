//! Shared fixtures for the criterion benches.

use tsca_core::{random_density, Grid, ProbabilityFamily, RuleParams, ThresholdMode};

/// Square random grid at density `rho`.
pub fn fixture(side: usize, rho: f64, seed: u64) -> Grid {
    random_density(side, side, rho, seed).expect("valid fixture")
}

/// K=4, log/exp, with the given rule-selection probability.
pub fn default_params(p: f64) -> RuleParams {
    RuleParams::from_families(
        4,
        ProbabilityFamily::Logarithmic,
        ProbabilityFamily::Exponential,
        p,
        ThresholdMode::AtLeast,
    )
    .expect("valid params")
}
