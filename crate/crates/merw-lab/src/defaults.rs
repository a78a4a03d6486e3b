//! Versioned default tolerances and budgets, echoed into every CLI output so
//! that artifacts identify the configuration that produced them.

use serde::{Deserialize, Serialize};

pub const DEFAULTS_VERSION: &str = "1";

/// Master seed used when none is supplied.
pub const DEFAULT_MASTER_SEED: u64 = 0x6d65_7277;

/// Environment variable overriding the global step budget.
pub const STEP_BUDGET_ENV: &str = "MERW_STEP_BUDGET";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Defaults {
    pub version: String,
    pub power_tol: f64,
    pub power_max_iter: usize,
    pub step_budget: u64,
    pub histogram_lo: f64,
    pub histogram_hi: f64,
    pub histogram_dx: f64,
    pub bootstrap_resamples: usize,
    pub ks_level: f64,
    pub catalan_cap: usize,
    pub master_seed: u64,
}

impl Default for Defaults {
    fn default() -> Self {
        Self {
            version: DEFAULTS_VERSION.to_string(),
            power_tol: 1e-12,
            power_max_iter: 1_000_000,
            step_budget: default_step_budget(),
            histogram_lo: 0.0,
            histogram_hi: 6.0,
            histogram_dx: 0.01,
            bootstrap_resamples: 500,
            ks_level: 0.01,
            catalan_cap: crate::series::CATALAN_CAP,
            master_seed: DEFAULT_MASTER_SEED,
        }
    }
}

/// 1e9 total steps unless MERW_STEP_BUDGET overrides it.
pub fn default_step_budget() -> u64 {
    std::env::var(STEP_BUDGET_ENV)
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(1_000_000_000)
}
