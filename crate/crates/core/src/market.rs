//! Price state and the one-step linear price update.
//!
//! The price moves by a white-noise term plus the excess demand of the two
//! agent classes: chartists push the price away from its moving average,
//! fundamentalists pull it back toward the fundamental value.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::params::ModelParams;

/// Bounded price history, most recent price last.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketState {
    prices: VecDeque<f64>,
    capacity: usize,
    t: u64,
}

impl MarketState {
    pub fn new(capacity: usize) -> Self {
        let capacity = capacity.max(1);
        MarketState {
            prices: VecDeque::with_capacity(capacity),
            capacity,
            t: 0,
        }
    }

    /// History holding `past + 1` copies of `price` (the flat warm-up).
    pub fn flat(price: f64, past: usize, capacity: usize) -> Self {
        let mut state = MarketState::new(capacity.max(past + 1));
        for _ in 0..=past {
            state.prices.push_back(price);
        }
        state
    }

    /// Builds a state from an explicit history (oldest first); the last entry is the current price.
    pub fn from_history(history: &[f64], capacity: usize) -> Self {
        let mut state = MarketState::new(capacity.max(history.len()));
        state.prices.extend(history.iter().copied());
        state
    }

    /// Appends the next price and advances the step counter.
    pub fn push(&mut self, price: f64) {
        if self.prices.len() == self.capacity {
            self.prices.pop_front();
        }
        self.prices.push_back(price);
        self.t += 1;
    }

    pub fn current(&self) -> Option<f64> {
        self.prices.back().copied()
    }

    pub fn len(&self) -> usize {
        self.prices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prices.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn prices(&self) -> impl DoubleEndedIterator<Item = f64> + ExactSizeIterator + '_ {
        self.prices.iter().copied()
    }

    /// Mean of the `m` prices strictly before the current one.
    pub fn moving_average(&self, m: usize) -> Result<f64> {
        if m == 0 {
            return Err(Error::Domain("moving-average window must be >= 1".into()));
        }
        let past = self.prices.len().saturating_sub(1);
        if past < m {
            return Err(Error::InsufficientHistory {
                needed: m,
                available: past,
            });
        }
        let sum: f64 = self.prices.iter().rev().skip(1).take(m).sum();
        Ok(sum / m as f64)
    }
}

/// Chartist excess demand `b (p - p_M) / (M - 1)`; same sign as `p - p_M`.
pub fn chartist_drift(p: f64, p_m: f64, b: f64, m: usize) -> Result<f64> {
    if m < 2 {
        return Err(Error::Domain(format!("chartist horizon must be >= 2, got {m}")));
    }
    Ok(b * (p - p_m) / (m - 1) as f64)
}

/// Fundamentalist excess demand `gamma (p_f - p)`.
pub fn fundamentalist_drift(p: f64, p_f: f64, gamma: f64) -> f64 {
    gamma * (p_f - p)
}

/// Chartist head-count and moving average for one horizon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HorizonMean {
    pub horizon: usize,
    pub chartists: usize,
    pub mean: f64,
}

/// Moving averages of the current state for each horizon, with chartist counts attached.
pub fn horizon_means(
    state: &MarketState,
    counts: impl IntoIterator<Item = (usize, usize)>,
) -> Result<Vec<HorizonMean>> {
    counts
        .into_iter()
        .map(|(horizon, chartists)| {
            Ok(HorizonMean {
                horizon,
                chartists,
                mean: state.moving_average(horizon)?,
            })
        })
        .collect()
}

/// Next price given the agent mix and a standard-normal draw `xi`.
///
/// The chartist term is summed per horizon, each weighted by its share
/// `count / n_total`; with one horizon this is exactly
/// `p + sigma xi + b (p - p_M)/(M - 1) n_c + gamma (p_f - p) n_f`.
pub fn price_step(
    state: &MarketState,
    params: &ModelParams,
    n_c: f64,
    n_f: f64,
    xi: f64,
    horizons: &[HorizonMean],
    n_total: usize,
) -> Result<f64> {
    if (n_c + n_f - 1.0).abs() > 1e-12 {
        return Err(Error::Domain(format!(
            "class fractions must sum to 1, got {n_c} + {n_f}"
        )));
    }
    if n_total == 0 {
        return Err(Error::Domain("population is empty".into()));
    }
    let p = state.current().ok_or(Error::InsufficientHistory {
        needed: 1,
        available: 0,
    })?;
    let n = n_total as f64;
    let mut chartist = 0.0;
    for h in horizons {
        if h.chartists == 0 {
            continue;
        }
        chartist += chartist_drift(p, h.mean, params.b, h.horizon)? * (h.chartists as f64 / n);
    }
    let fundamentalist = fundamentalist_drift(p, params.p_f, params.gamma) * n_f;
    Ok(p + params.sigma * xi + chartist + fundamentalist)
}
