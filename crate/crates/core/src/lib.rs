//! Minimal fundamentalist/chartist agent-based market model.
//!
//! Agents switch between a trend-following (chartist) and a mean-reverting
//! (fundamentalist) strategy with herding rates modulated by price signals.
//! For a finite number of agents this produces intermittent bursts of
//! chartist activity with fat-tailed returns and volatility clustering.

pub mod engine;
pub mod error;
pub mod io;
pub mod market;
pub mod params;
pub mod presets;
pub mod report;
pub mod rng;
pub mod selforg;
pub mod stats;
pub mod strategy;
pub mod sweep;

pub use engine::{run_ensemble, run_simulation, NPolicy, SimConfig, SimOutput};
pub use error::{Error, Result};
pub use io::{parse_config, parse_config_str, write_config};
pub use params::{HorizonPolicy, ModelParams};
pub use presets::preset;
pub use selforg::{EntrantRule, SelfOrgPolicy};
