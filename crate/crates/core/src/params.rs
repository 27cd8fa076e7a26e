//! Scalar model constants and the chartist horizon policy.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// How chartist moving-average horizons are assigned to agents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum HorizonPolicy {
    /// Every agent uses the same horizon.
    Single(usize),
    /// Each agent draws a fixed personal horizon from a weighted set.
    Mixed(Vec<(usize, f64)>),
}

impl HorizonPolicy {
    pub fn max_horizon(&self) -> usize {
        match self {
            HorizonPolicy::Single(m) => *m,
            HorizonPolicy::Mixed(set) => set.iter().map(|&(m, _)| m).max().unwrap_or(0),
        }
    }

    /// Distinct horizons in declaration order.
    pub fn horizons(&self) -> Vec<usize> {
        match self {
            HorizonPolicy::Single(m) => vec![*m],
            HorizonPolicy::Mixed(set) => set.iter().map(|&(m, _)| m).collect(),
        }
    }

    /// Maps a uniform draw in `[0, 1)` to a horizon by inverting the cumulative weights.
    pub fn pick(&self, u: f64) -> usize {
        match self {
            HorizonPolicy::Single(m) => *m,
            HorizonPolicy::Mixed(set) => {
                let mut acc = 0.0;
                for &(m, w) in set {
                    acc += w;
                    if u < acc {
                        return m;
                    }
                }
                set.last().map(|&(m, _)| m).unwrap_or(2)
            }
        }
    }

    pub fn is_mixed(&self) -> bool {
        matches!(self, HorizonPolicy::Mixed(_))
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            HorizonPolicy::Single(m) => {
                if *m < 2 {
                    return Err(invalid("horizon", format!("M must be >= 2, got {m}")));
                }
            }
            HorizonPolicy::Mixed(set) => {
                if set.is_empty() {
                    return Err(invalid("horizons", "heterogeneous horizon set is empty"));
                }
                let mut seen = Vec::with_capacity(set.len());
                for &(m, w) in set {
                    if m < 2 {
                        return Err(invalid("horizons", format!("M must be >= 2, got {m}")));
                    }
                    if seen.contains(&m) {
                        return Err(invalid("horizons", format!("horizon {m} listed twice")));
                    }
                    seen.push(m);
                    if !(w.is_finite() && w > 0.0) {
                        return Err(invalid("horizon_weights", format!("weights must be positive, got {w}")));
                    }
                }
                let total: f64 = set.iter().map(|&(_, w)| w).sum();
                if (total - 1.0).abs() > 1e-9 {
                    return Err(invalid(
                        "horizon_weights",
                        format!("weights must sum to 1, got {total}"),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Model constants shared by the price and switching dynamics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Chartist impact strength.
    pub b: f64,
    /// Fundamentalist reversion rate per step.
    pub gamma: f64,
    /// Noise amplitude per step.
    pub sigma: f64,
    /// Fundamental price.
    pub p_f: f64,
    /// Base switching rate scale `B`.
    pub base_rate: f64,
    /// Herding parameter; the idiosyncratic switching term is `K = r / N`.
    pub r: f64,
    /// Asymmetry in favour of fundamentalists.
    pub delta: f64,
    pub horizons: HorizonPolicy,
    /// Multiply the switching rates by the price-signal exponentials.
    pub exp_coupling: bool,
    /// Optional lower bound applied to the price after each step. Off by default.
    pub price_floor: Option<f64>,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            b: 1.0,
            gamma: 0.01,
            sigma: 0.01,
            p_f: 100.0,
            base_rate: 0.1,
            r: 1.0,
            delta: 0.0,
            horizons: HorizonPolicy::Single(10),
            exp_coupling: true,
            price_floor: None,
        }
    }
}

fn finite(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(invalid(name, format!("must be finite, got {v}")))
    }
}

impl ModelParams {
    /// Checks every range invariant; the error names the offending field.
    pub fn validate(&self) -> Result<()> {
        finite("b", self.b)?;
        finite("gamma", self.gamma)?;
        finite("sigma", self.sigma)?;
        finite("p_f", self.p_f)?;
        finite("base_rate", self.base_rate)?;
        finite("r", self.r)?;
        finite("delta", self.delta)?;
        if self.b < 0.0 {
            return Err(invalid("b", format!("must be >= 0, got {}", self.b)));
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(invalid("gamma", format!("must lie in [0, 1), got {}", self.gamma)));
        }
        if self.sigma < 0.0 {
            return Err(invalid("sigma", format!("must be >= 0, got {}", self.sigma)));
        }
        if self.base_rate <= 0.0 {
            return Err(invalid("base_rate", format!("must be > 0, got {}", self.base_rate)));
        }
        // r = 0 is admitted: it switches off idiosyncratic switching (absorbing states).
        if self.r < 0.0 {
            return Err(invalid("r", format!("must be >= 0, got {}", self.r)));
        }
        if !(self.delta > -1.0 && self.delta < 1.0) {
            return Err(invalid("delta", format!("must lie in (-1, 1), got {}", self.delta)));
        }
        if let Some(floor) = self.price_floor {
            if !(floor.is_finite() && floor > 0.0) {
                return Err(invalid(
                    "price_floor",
                    format!("must be a positive finite value, got {floor}"),
                ));
            }
        }
        self.horizons.validate()
    }

    /// `K = r / N`.
    pub fn herding_k(&self, n: usize) -> f64 {
        self.r / n as f64
    }
}
