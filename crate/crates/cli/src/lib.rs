//! Scenario runner for the stationary Boltzmann solver: configuration,
//! kernel caching, verification scenarios and report emission.

pub mod cache;
pub mod config;
pub mod report;
pub mod scenarios;

pub use config::RunConfig;
pub use scenarios::{cache_kernel, run_scenario, Scenario};
