//! Stochastic strategy switching between chartists and fundamentalists.
//!
//! Each step every agent may change class. The per-step probability is a
//! herding rate `B (1 ± delta) (K + share of the other class)`, optionally
//! multiplied by a price-signal exponential, clamped to `[0, 1]`. All agents
//! switch synchronously against the counts at the start of the step.

use statrs::distribution::{Beta, ContinuousCDF};
use statrs::function::beta::ln_beta;

use crate::error::{invalid, Error, Result};
use crate::market::HorizonMean;
use crate::params::{HorizonPolicy, ModelParams};
use crate::rng::SimRng;

/// Largest argument fed to the price-signal exponential.
pub const EXPONENT_CAP: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    Chartist,
    Fundamentalist,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Agent {
    pub strategy: Strategy,
    /// Moving-average horizon, fixed for the agent's lifetime.
    pub horizon: usize,
}

/// Agents plus cached class counts.
#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    agents: Vec<Agent>,
    chartists: usize,
}

impl Population {
    pub fn new(agents: Vec<Agent>) -> Self {
        let chartists = agents.iter().filter(|a| a.strategy == Strategy::Chartist).count();
        Population { agents, chartists }
    }

    /// `n` agents on one horizon, the first `chartists` of them chartists.
    pub fn with_counts(n: usize, chartists: usize, horizon: usize) -> Self {
        let agents = (0..n)
            .map(|i| Agent {
                strategy: if i < chartists {
                    Strategy::Chartist
                } else {
                    Strategy::Fundamentalist
                },
                horizon,
            })
            .collect();
        Population::new(agents)
    }

    /// Initial population: the first `round(fraction * n)` agents are chartists;
    /// horizons are drawn from the policy (one uniform per agent, only for mixed policies).
    pub fn initial(n: usize, chartist_fraction: f64, policy: &HorizonPolicy, rng: &mut SimRng) -> Self {
        let chartists = ((chartist_fraction * n as f64).round() as usize).min(n);
        let agents = (0..n)
            .map(|i| Agent {
                strategy: if i < chartists {
                    Strategy::Chartist
                } else {
                    Strategy::Fundamentalist
                },
                horizon: draw_horizon(policy, rng),
            })
            .collect();
        Population::new(agents)
    }

    pub fn len(&self) -> usize {
        self.agents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.agents.is_empty()
    }

    pub fn chartists(&self) -> usize {
        self.chartists
    }

    pub fn fundamentalists(&self) -> usize {
        self.agents.len() - self.chartists
    }

    /// `x = N_c / N`.
    pub fn chartist_fraction(&self) -> f64 {
        self.chartists as f64 / self.agents.len() as f64
    }

    pub fn agents(&self) -> &[Agent] {
        &self.agents
    }

    /// Chartist count per horizon, in the order given.
    pub fn chartists_by_horizon(&self, horizons: &[usize]) -> Vec<(usize, usize)> {
        let mut counts: Vec<(usize, usize)> = horizons.iter().map(|&h| (h, 0)).collect();
        for a in &self.agents {
            if a.strategy == Strategy::Chartist {
                if let Some(slot) = counts.iter_mut().find(|(h, _)| *h == a.horizon) {
                    slot.1 += 1;
                }
            }
        }
        counts
    }

    pub fn push(&mut self, agent: Agent) {
        if agent.strategy == Strategy::Chartist {
            self.chartists += 1;
        }
        self.agents.push(agent);
    }

    /// Removes the agent at `index`; the last agent takes its slot.
    pub fn remove(&mut self, index: usize) -> Agent {
        let agent = self.agents.swap_remove(index);
        if agent.strategy == Strategy::Chartist {
            self.chartists -= 1;
        }
        agent
    }

    /// True when the cached counts agree with a full recount.
    pub fn counts_consistent(&self) -> bool {
        Population::new(self.agents.clone()).chartists == self.chartists
    }
}

pub(crate) fn draw_horizon(policy: &HorizonPolicy, rng: &mut SimRng) -> usize {
    match policy {
        HorizonPolicy::Single(m) => *m,
        HorizonPolicy::Mixed(_) => policy.pick(rng.uniform()),
    }
}

fn capped_exp(arg: f64) -> f64 {
    arg.min(EXPONENT_CAP).exp()
}

/// Probability per step that a chartist becomes a fundamentalist.
pub fn rate_c_to_f(pop: &Population, p: f64, params: &ModelParams) -> f64 {
    let n = pop.len() as f64;
    let signal = if params.exp_coupling {
        capped_exp(params.gamma * (params.p_f - p).abs())
    } else {
        1.0
    };
    let rate = params.base_rate
        * (1.0 + params.delta)
        * (params.herding_k(pop.len()) + pop.fundamentalists() as f64 / n)
        * signal;
    clamp_probability(rate)
}

/// Probability per step that a fundamentalist with horizon `m` becomes a chartist.
pub fn rate_f_to_c(pop: &Population, p: f64, p_m: f64, params: &ModelParams, m: usize) -> f64 {
    let n = pop.len() as f64;
    let signal = if params.exp_coupling && m >= 2 {
        capped_exp(params.b * (p_m - p).abs() / (m - 1) as f64)
    } else {
        1.0
    };
    let rate =
        params.base_rate * (1.0 - params.delta) * (params.herding_k(pop.len()) + pop.chartists() as f64 / n) * signal;
    clamp_probability(rate)
}

fn clamp_probability(rate: f64) -> f64 {
    if rate.is_nan() {
        1.0
    } else {
        rate.clamp(0.0, 1.0)
    }
}

/// Switching probabilities for one step.
#[derive(Debug, Clone, PartialEq)]
pub struct SwitchRates {
    pub p_cf: f64,
    /// `p_fc` indexed by horizon value.
    p_fc: Vec<f64>,
}

impl SwitchRates {
    /// The same pair of rates for every horizon up to `max_horizon`.
    pub fn uniform(p_cf: f64, p_fc: f64, max_horizon: usize) -> Self {
        SwitchRates {
            p_cf: clamp_probability(p_cf),
            p_fc: vec![clamp_probability(p_fc); max_horizon + 1],
        }
    }

    pub fn compute(pop: &Population, p: f64, means: &[HorizonMean], params: &ModelParams) -> Self {
        let max_h = means.iter().map(|h| h.horizon).max().unwrap_or(0);
        let mut p_fc = vec![0.0; max_h + 1];
        for h in means {
            p_fc[h.horizon] = rate_f_to_c(pop, p, h.mean, params, h.horizon);
        }
        SwitchRates {
            p_cf: rate_c_to_f(pop, p, params),
            p_fc,
        }
    }

    pub fn p_fc(&self, horizon: usize) -> f64 {
        self.p_fc.get(horizon).copied().unwrap_or(0.0)
    }
}

/// Lets every agent switch class with its rate; one uniform draw per agent in index order.
pub fn apply_switches(pop: &mut Population, rates: &SwitchRates, rng: &mut SimRng) {
    let mut chartists = pop.chartists;
    for agent in pop.agents.iter_mut() {
        let u = rng.uniform();
        match agent.strategy {
            Strategy::Chartist => {
                if u < rates.p_cf {
                    agent.strategy = Strategy::Fundamentalist;
                    chartists -= 1;
                }
            }
            Strategy::Fundamentalist => {
                if u < rates.p_fc(agent.horizon) {
                    agent.strategy = Strategy::Chartist;
                    chartists += 1;
                }
            }
        }
    }
    pop.chartists = chartists;
}

/// One synchronous switching step; `means` must cover every horizon present in `pop`.
pub fn update_strategies(
    pop: &mut Population,
    p: f64,
    means: &[HorizonMean],
    params: &ModelParams,
    rng: &mut SimRng,
) -> SwitchRates {
    let rates = SwitchRates::compute(pop, p, means, params);
    apply_switches(pop, &rates, rng);
    rates
}

fn check_open_unit(x: f64) -> Result<()> {
    if x > 0.0 && x < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("x must lie in (0, 1), got {x}")))
    }
}

/// Normalised `Beta(eps, eps)` density: the symmetric stationary law of `x = N_c/N` with `eps = K N`.
pub fn equilibrium_density_symmetric(x: f64, eps: f64) -> Result<f64> {
    check_open_unit(x)?;
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(invalid("eps", format!("must be positive, got {eps}")));
    }
    let log = (eps - 1.0) * (x.ln() + (1.0 - x).ln()) - ln_beta(eps, eps);
    Ok(log.exp())
}

/// Unnormalised asymmetric kernel `x^{r(1-d)-1} (1-x)^{r(1+d)-1} exp(-2 d nu N)`.
///
/// Only its shape is meaningful; `nu` is supplied by the caller.
pub fn equilibrium_density_asymmetric(x: f64, r: f64, delta: f64, nu: f64, n: usize) -> Result<f64> {
    check_open_unit(x)?;
    let a = r * (1.0 - delta) - 1.0;
    let b = r * (1.0 + delta) - 1.0;
    Ok((a * x.ln() + b * (1.0 - x).ln() - 2.0 * delta * nu * n as f64).exp())
}

/// Mode of the asymmetric kernel, `(r(1-d) - 1) / (2r - 2)`, when it is interior.
pub fn asymmetric_mode(r: f64, delta: f64) -> Option<f64> {
    let a = r * (1.0 - delta);
    let b = r * (1.0 + delta);
    (a > 1.0 && b > 1.0).then(|| (a - 1.0) / (a + b - 2.0))
}

/// Kolmogorov–Smirnov distance between a histogram over the lattice `k/N`,
/// `k = 0..=N`, and `Beta(a, b)` discretised onto that lattice.
///
/// Lattice point `k` carries the Beta mass of `[k/(N+1), (k+1)/(N+1))`, which is
/// exact for the uniform case and keeps the comparison free of the `1/N` jump floor.
pub fn lattice_beta_ks(histogram: &[u64], a: f64, b: f64) -> Result<f64> {
    if histogram.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: histogram.len(),
        });
    }
    let beta = Beta::new(a, b).map_err(|e| Error::Domain(e.to_string()))?;
    let total: u64 = histogram.iter().sum();
    if total == 0 {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let cells = histogram.len() as f64;
    let mut cum = 0u64;
    let mut worst: f64 = 0.0;
    for (k, &c) in histogram.iter().enumerate() {
        cum += c;
        let empirical = cum as f64 / total as f64;
        let reference = beta.cdf((k as f64 + 1.0) / cells);
        worst = worst.max((empirical - reference).abs());
    }
    Ok(worst)
}

/// Lengths of fundamentalist- and chartist-dominated episodes.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ResidenceTimes {
    pub fundamentalist: Vec<usize>,
    pub chartist: Vec<usize>,
}

/// Splits an `x(t)` trajectory into episodes with hysteresis.
///
/// An F episode starts when `x < low` and lasts until `x > high`; a C
/// episode is the mirror image. Samples before the first threshold crossing
/// belong to no episode; the final episode is kept even though it is cut by
/// the end of the series.
pub fn residence_times(x: &[f64], low: f64, high: f64) -> Result<ResidenceTimes> {
    if !(low > 0.0 && low < high && high < 1.0) {
        return Err(Error::Domain(format!(
            "thresholds must satisfy 0 < low < high < 1, got ({low}, {high})"
        )));
    }
    let mut out = ResidenceTimes::default();
    let mut state: Option<(Strategy, usize)> = None;
    for (t, &v) in x.iter().enumerate() {
        match state {
            Some((Strategy::Fundamentalist, start)) if v > high => {
                out.fundamentalist.push(t - start);
                state = Some((Strategy::Chartist, t));
            }
            Some((Strategy::Chartist, start)) if v < low => {
                out.chartist.push(t - start);
                state = Some((Strategy::Fundamentalist, t));
            }
            None if v < low => state = Some((Strategy::Fundamentalist, t)),
            None if v > high => state = Some((Strategy::Chartist, t)),
            _ => {}
        }
    }
    match state {
        Some((Strategy::Fundamentalist, start)) => out.fundamentalist.push(x.len() - start),
        Some((Strategy::Chartist, start)) => out.chartist.push(x.len() - start),
        None => {}
    }
    Ok(out)
}

/// Median of a duration list (mean of the two central values for even lengths).
pub fn median_duration(durations: &[usize]) -> Option<f64> {
    if durations.is_empty() {
        return None;
    }
    let mut v = durations.to_vec();
    v.sort_unstable();
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2] as f64
    } else {
        (v[n / 2 - 1] + v[n / 2]) as f64 / 2.0
    })
}
