//! Variable population size driven by price fluctuations.
//!
//! Agents enter while the rolling price variance exceeds `theta_in` and
//! leave while it is below `theta_out`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::market::MarketState;
use crate::params::HorizonPolicy;
use crate::rng::SimRng;
use crate::strategy::{draw_horizon, Agent, Population, Strategy};

/// Class assigned to an entering agent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntrantRule {
    Fundamentalist,
    /// Chartist with probability `N_c / N`.
    Proportional,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelfOrgPolicy {
    pub theta_in: f64,
    pub theta_out: f64,
    pub window: usize,
    pub flow_rate: usize,
    pub n_min: usize,
    pub n_max: usize,
    pub entrant: EntrantRule,
}

impl Default for SelfOrgPolicy {
    fn default() -> Self {
        SelfOrgPolicy {
            theta_in: 1.0,
            theta_out: 0.5,
            window: 50,
            flow_rate: 1,
            n_min: 10,
            n_max: 10_000,
            entrant: EntrantRule::Proportional,
        }
    }
}

impl SelfOrgPolicy {
    pub fn validate(&self) -> Result<()> {
        if !(self.theta_in.is_finite() && self.theta_in > 0.0) {
            return Err(invalid("theta_in", format!("must be > 0, got {}", self.theta_in)));
        }
        if !(self.theta_out.is_finite() && self.theta_out > 0.0) {
            return Err(invalid("theta_out", format!("must be > 0, got {}", self.theta_out)));
        }
        if self.theta_out > self.theta_in {
            return Err(invalid(
                "theta_out",
                format!(
                    "hysteresis band requires theta_out <= theta_in, got {} > {}",
                    self.theta_out, self.theta_in
                ),
            ));
        }
        if self.window < 2 {
            return Err(invalid("window", format!("must be >= 2, got {}", self.window)));
        }
        if self.flow_rate < 1 {
            return Err(invalid("flow_rate", "must be >= 1"));
        }
        if self.n_min < 1 || self.n_min >= self.n_max {
            return Err(invalid(
                "n_min",
                format!("bounds require 1 <= n_min < n_max, got {}..{}", self.n_min, self.n_max),
            ));
        }
        Ok(())
    }
}

/// Sample variance (divisor `T - 1`) of the last `window` prices, current price included.
pub fn rolling_variance(state: &MarketState, window: usize) -> Result<f64> {
    if window < 2 {
        return Err(Error::Domain(format!("variance window must be >= 2, got {window}")));
    }
    if state.len() < window {
        return Err(Error::InsufficientHistory {
            needed: window,
            available: state.len(),
        });
    }
    let n = window as f64;
    let mean = state.prices().rev().take(window).sum::<f64>() / n;
    let ss: f64 = state.prices().rev().take(window).map(|p| (p - mean) * (p - mean)).sum();
    Ok(ss / (n - 1.0))
}

/// What a flow step did to the population.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flow {
    Entered(usize),
    Exited(usize),
    Unchanged,
}

/// Adds or removes up to `flow_rate` agents according to the thresholds.
///
/// Entrants draw their class (proportional rule: one uniform) and then their
/// horizon (one uniform, mixed policies only); leavers are picked uniformly.
pub fn population_flow_step(
    pop: &mut Population,
    rolling_var: f64,
    policy: &SelfOrgPolicy,
    horizons: &HorizonPolicy,
    rng: &mut SimRng,
) -> Flow {
    if rolling_var > policy.theta_in {
        let mut added = 0;
        while added < policy.flow_rate && pop.len() < policy.n_max {
            let strategy = match policy.entrant {
                EntrantRule::Fundamentalist => Strategy::Fundamentalist,
                EntrantRule::Proportional => {
                    if rng.uniform() < pop.chartist_fraction() {
                        Strategy::Chartist
                    } else {
                        Strategy::Fundamentalist
                    }
                }
            };
            let horizon = draw_horizon(horizons, rng);
            pop.push(Agent { strategy, horizon });
            added += 1;
        }
        if added > 0 {
            return Flow::Entered(added);
        }
    } else if rolling_var < policy.theta_out {
        let mut removed = 0;
        while removed < policy.flow_rate && pop.len() > policy.n_min {
            let idx = rng.index(pop.len());
            pop.remove(idx);
            removed += 1;
        }
        if removed > 0 {
            return Flow::Exited(removed);
        }
    }
    Flow::Unchanged
}
