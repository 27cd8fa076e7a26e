//! The simulation loop and the ensemble runner.
//!
//! Each step consumes random draws in a fixed order: one normal variate for
//! the price, then one uniform per agent in index order for switching, then
//! (self-organizing runs only) the draws of the population flow.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::market::{horizon_means, price_step, HorizonMean, MarketState};
use crate::params::{HorizonPolicy, ModelParams};
use crate::rng::SimRng;
use crate::selforg::{population_flow_step, rolling_variance, SelfOrgPolicy};
use crate::strategy::{update_strategies, Population};

/// Prices beyond this magnitude abort the run.
pub const PRICE_LIMIT: f64 = 1e100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum NPolicy {
    FixedN,
    SelfOrganizing(SelfOrgPolicy),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub params: ModelParams,
    pub n_initial: usize,
    pub n_policy: NPolicy,
    pub steps: u64,
    pub seed: u64,
    pub record_every: u64,
    pub burn_in: u64,
    /// Share of the initial population that starts as chartists.
    pub initial_chartist_fraction: f64,
    /// Rolling-variance window for fixed-N runs; self-organizing runs use the policy window.
    pub variance_window: Option<usize>,
    /// Skip strategy switching entirely.
    pub frozen_population: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            params: ModelParams::default(),
            n_initial: 500,
            n_policy: NPolicy::FixedN,
            steps: 100_000,
            seed: 1,
            record_every: 1,
            burn_in: 0,
            initial_chartist_fraction: 0.5,
            variance_window: None,
            frozen_population: false,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.n_initial == 0 {
            return Err(invalid("n_initial", "must be >= 1"));
        }
        if self.steps <= self.burn_in {
            return Err(invalid(
                "steps",
                format!(
                    "must exceed burn_in, got steps {} <= burn_in {}",
                    self.steps, self.burn_in
                ),
            ));
        }
        if self.record_every == 0 {
            return Err(invalid("record_every", "must be >= 1"));
        }
        if !(0.0..=1.0).contains(&self.initial_chartist_fraction) {
            return Err(invalid(
                "initial_chartist_fraction",
                format!("must lie in [0, 1], got {}", self.initial_chartist_fraction),
            ));
        }
        if let Some(w) = self.variance_window {
            if w < 2 {
                return Err(invalid("variance_window", format!("must be >= 2, got {w}")));
            }
        }
        if let NPolicy::SelfOrganizing(policy) = &self.n_policy {
            policy.validate()?;
            if self.n_initial < policy.n_min || self.n_initial > policy.n_max {
                return Err(invalid(
                    "n_initial",
                    format!(
                        "must lie within the population bounds {}..={}, got {}",
                        policy.n_min, policy.n_max, self.n_initial
                    ),
                ));
            }
        }
        Ok(())
    }

    fn window(&self) -> Option<usize> {
        match &self.n_policy {
            NPolicy::SelfOrganizing(p) => Some(p.window),
            NPolicy::FixedN => self.variance_window,
        }
    }
}

/// Recorded time series plus run metadata. All series have equal length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimOutput {
    pub config: SimConfig,
    pub version: String,
    pub seed: u64,
    pub step: Vec<u64>,
    pub price: Vec<f64>,
    #[serde(rename = "return")]
    pub ret: Vec<f64>,
    pub n_c: Vec<usize>,
    pub n_f: Vec<usize>,
    pub n: Vec<usize>,
    /// Empty when no variance window applies.
    pub rolling_variance: Vec<f64>,
}

impl SimOutput {
    fn new(config: &SimConfig) -> Self {
        SimOutput {
            config: config.clone(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed: config.seed,
            step: Vec::new(),
            price: Vec::new(),
            ret: Vec::new(),
            n_c: Vec::new(),
            n_f: Vec::new(),
            n: Vec::new(),
            rolling_variance: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.step.len()
    }

    pub fn is_empty(&self) -> bool {
        self.step.is_empty()
    }

    /// Chartist fraction `N_c / N` at each record.
    pub fn chartist_fraction(&self) -> Vec<f64> {
        self.n_c
            .iter()
            .zip(&self.n)
            .map(|(&c, &n)| c as f64 / n as f64)
            .collect()
    }
}

fn current_means(state: &MarketState, pop: &Population, horizons: &HorizonPolicy) -> Result<Vec<HorizonMean>> {
    match horizons {
        HorizonPolicy::Single(m) => horizon_means(state, [(*m, pop.chartists())]),
        HorizonPolicy::Mixed(_) => horizon_means(state, pop.chartists_by_horizon(&horizons.horizons())),
    }
}

/// Runs one simulation from a flat history at `p_f`.
pub fn run_simulation(config: &SimConfig) -> Result<SimOutput> {
    config.validate()?;
    let params = &config.params;
    let horizons = &params.horizons;
    let window = config.window();
    let past = horizons.max_horizon().max(window.unwrap_or(0));
    let mut state = MarketState::flat(params.p_f, past, past + 1);
    let mut rng = SimRng::new(config.seed);
    let mut pop = Population::initial(config.n_initial, config.initial_chartist_fraction, horizons, &mut rng);
    let mut out = SimOutput::new(config);

    for s in 1..=config.steps {
        let prev = state.current().unwrap_or(params.p_f);
        let xi = rng.standard_normal();
        let means = current_means(&state, &pop, horizons)?;
        let n = pop.len();
        let n_c = pop.chartists() as f64 / n as f64;
        let mut next = price_step(&state, params, n_c, 1.0 - n_c, xi, &means, n)?;
        if let Some(floor) = params.price_floor {
            next = next.max(floor);
        }
        if !next.is_finite() || next.abs() > PRICE_LIMIT {
            return Err(Error::NumericOverflow {
                step: s,
                price: next,
                partial: Box::new(out),
            });
        }
        state.push(next);

        if !config.frozen_population {
            let means = current_means(&state, &pop, horizons)?;
            update_strategies(&mut pop, next, &means, params, &mut rng);
        }

        let var = match window {
            Some(w) => Some(rolling_variance(&state, w)?),
            None => None,
        };
        if let (NPolicy::SelfOrganizing(policy), Some(v)) = (&config.n_policy, var) {
            population_flow_step(&mut pop, v, policy, horizons, &mut rng);
        }

        if s > config.burn_in && s % config.record_every == 0 {
            out.step.push(s);
            out.price.push(next);
            out.ret.push(next - prev);
            out.n_c.push(pop.chartists());
            out.n_f.push(pop.fundamentalists());
            out.n.push(pop.len());
            if let Some(v) = var {
                out.rolling_variance.push(v);
            }
        }
    }
    Ok(out)
}

/// Runs every config on a pool of `max_parallel` threads; results keep input order.
pub fn run_ensemble(configs: &[SimConfig], max_parallel: usize) -> Result<Vec<Result<SimOutput>>> {
    if configs.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(max_parallel.max(1))
        .build()
        .map_err(|e| Error::Domain(format!("thread pool: {e}")))?;
    Ok(pool.install(|| configs.par_iter().map(run_simulation).collect()))
}

/// `count` copies of `base` with seeds derived from `master_seed`.
pub fn seeded_ensemble(base: &SimConfig, master_seed: u64, count: usize) -> Vec<SimConfig> {
    (0..count as u64)
        .map(|i| SimConfig {
            seed: crate::rng::derive_seed(master_seed, i),
            ..base.clone()
        })
        .collect()
}
