//! Stylized-facts statistics: return moments, tails, autocorrelations and
//! volatility clustering.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fraction of a series discarded as warm-up by the report helpers.
pub const DEFAULT_BURN_IN_FRACTION: f64 = 0.1;

/// Drops the leading `fraction` of a series.
pub fn drop_burn_in(series: &[f64], fraction: f64) -> &[f64] {
    let cut = ((series.len() as f64) * fraction.clamp(0.0, 1.0)).floor() as usize;
    &series[cut.min(series.len())..]
}

/// First differences `p(t) - p(t-1)`.
pub fn returns(prices: &[f64]) -> Result<Vec<f64>> {
    if prices.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: prices.len(),
        });
    }
    Ok(prices.windows(2).map(|w| w[1] - w[0]).collect())
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Central moments of orders 2, 3 and 4.
fn central_moments(xs: &[f64]) -> (f64, f64, f64, f64) {
    let m = mean(xs);
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &x in xs {
        let d = x - m;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    let n = xs.len() as f64;
    (m, m2 / n, m3 / n, m4 / n)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesStats {
    pub n: usize,
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
}

pub fn series_stats(series: &[f64]) -> Result<SeriesStats> {
    if series.len() < 4 {
        return Err(Error::InsufficientData {
            needed: 4,
            got: series.len(),
        });
    }
    let (m, m2, m3, m4) = central_moments(series);
    if m2 <= 0.0 {
        return Err(Error::ZeroVariance);
    }
    Ok(SeriesStats {
        n: series.len(),
        mean: m,
        variance: m2,
        skewness: m3 / m2.powf(1.5),
        excess_kurtosis: m4 / (m2 * m2) - 3.0,
    })
}

/// `m4 / m2^2 - 3` from central moments; zero for a Gaussian.
pub fn excess_kurtosis(series: &[f64]) -> Result<f64> {
    series_stats(series).map(|s| s.excess_kurtosis)
}

/// Autocorrelation or autocovariance by lag with its white-noise band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcfReport {
    pub lags: Vec<usize>,
    pub values: Vec<f64>,
    /// Half-width `z / sqrt(n)` of the white-noise band.
    pub noise_band: f64,
    pub n: usize,
}

impl AcfReport {
    pub fn value(&self, lag: usize) -> Option<f64> {
        self.lags.iter().position(|&l| l == lag).map(|i| self.values[i])
    }

    /// Share of lags in `from..=to` whose value lies strictly inside the band.
    pub fn fraction_inside(&self, from: usize, to: usize) -> f64 {
        let (mut inside, mut total) = (0usize, 0usize);
        for (&l, &v) in self.lags.iter().zip(&self.values) {
            if l >= from && l <= to {
                total += 1;
                if v.abs() < self.noise_band {
                    inside += 1;
                }
            }
        }
        if total == 0 {
            0.0
        } else {
            inside as f64 / total as f64
        }
    }

    /// First lag whose value drops below `threshold`.
    pub fn first_below(&self, threshold: f64) -> Option<usize> {
        self.lags
            .iter()
            .zip(&self.values)
            .find(|(_, &v)| v < threshold)
            .map(|(&l, _)| l)
    }
}

/// 1.96: two-sided 95% normal quantile used for the noise band.
pub const BAND_Z: f64 = 1.96;

fn lagged_sum(dev: &[f64], lag: usize) -> f64 {
    dev[..dev.len() - lag].iter().zip(&dev[lag..]).map(|(a, b)| a * b).sum()
}

fn check_lags(series: &[f64], max_lag: usize) -> Result<()> {
    if series.len() < max_lag + 2 {
        return Err(Error::InsufficientData {
            needed: max_lag + 2,
            got: series.len(),
        });
    }
    Ok(())
}

/// `rho(k) = sum (x_t - m)(x_{t+k} - m) / sum (x_t - m)^2` for `k = 0..=max_lag`.
pub fn autocorrelation(series: &[f64], max_lag: usize) -> Result<AcfReport> {
    check_lags(series, max_lag)?;
    let m = mean(series);
    let dev: Vec<f64> = series.iter().map(|x| x - m).collect();
    let denom = lagged_sum(&dev, 0);
    if denom <= 0.0 {
        return Err(Error::ZeroVariance);
    }
    let n = series.len();
    Ok(AcfReport {
        lags: (0..=max_lag).collect(),
        values: (0..=max_lag).map(|k| lagged_sum(&dev, k) / denom).collect(),
        noise_band: BAND_Z / (n as f64).sqrt(),
        n,
    })
}

/// Autocovariance with divisor `n`; lag 0 is the population variance.
pub fn autocovariance(series: &[f64], max_lag: usize) -> Result<AcfReport> {
    check_lags(series, max_lag)?;
    let m = mean(series);
    let dev: Vec<f64> = series.iter().map(|x| x - m).collect();
    let n = series.len();
    Ok(AcfReport {
        lags: (0..=max_lag).collect(),
        values: (0..=max_lag).map(|k| lagged_sum(&dev, k) / n as f64).collect(),
        noise_band: BAND_Z / (n as f64).sqrt(),
        n,
    })
}

/// Smallest lag at which the autocorrelation falls below `threshold`,
/// scanning lag by lag up to `max_lag`.
pub fn decay_lag(series: &[f64], threshold: f64, max_lag: usize) -> Result<Option<usize>> {
    check_lags(series, max_lag)?;
    let m = mean(series);
    let dev: Vec<f64> = series.iter().map(|x| x - m).collect();
    let denom = lagged_sum(&dev, 0);
    if denom <= 0.0 {
        return Err(Error::ZeroVariance);
    }
    Ok((1..=max_lag).find(|&k| lagged_sum(&dev, k) / denom < threshold))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VolatilityMode {
    Abs,
    Squared,
}

/// `|r|` or `r^2`, box-smoothed over `window` samples (output length `n - window + 1`).
pub fn volatility_series(returns: &[f64], mode: VolatilityMode, window: usize) -> Result<Vec<f64>> {
    if returns.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    if window == 0 || window > returns.len() {
        return Err(Error::Domain(format!(
            "smoothing window must lie in 1..={}, got {window}",
            returns.len()
        )));
    }
    let raw: Vec<f64> = returns
        .iter()
        .map(|r| match mode {
            VolatilityMode::Abs => r.abs(),
            VolatilityMode::Squared => r * r,
        })
        .collect();
    if window == 1 {
        return Ok(raw);
    }
    Ok(raw
        .windows(window)
        .map(|w| w.iter().sum::<f64>() / window as f64)
        .collect())
}

/// Autocorrelation of `|r|`.
pub fn volatility_clustering_report(returns: &[f64], max_lag: usize) -> Result<AcfReport> {
    let abs: Vec<f64> = returns.iter().map(|r| r.abs()).collect();
    autocorrelation(&abs, max_lag)
}

/// Hill estimate of the tail index of `|series|` from the top `k_fraction` order statistics.
///
/// `alpha = k / sum_{i<k} ln(x_(i) / x_(k))` with `x_(0) >= x_(1) >= ...`.
pub fn hill_tail_index(series: &[f64], k_fraction: f64) -> Result<f64> {
    if !(k_fraction > 0.0 && k_fraction < 1.0) {
        return Err(Error::Domain(format!(
            "k_fraction must lie in (0, 1), got {k_fraction}"
        )));
    }
    let k = (series.len() as f64 * k_fraction).floor() as usize;
    if k < 10 || k >= series.len() {
        return Err(Error::InsufficientData {
            needed: (10.0 / k_fraction).ceil() as usize,
            got: series.len(),
        });
    }
    let mut abs: Vec<f64> = series.iter().map(|x| x.abs()).collect();
    abs.sort_unstable_by(|a, b| b.total_cmp(a));
    let threshold = abs[k];
    if threshold <= 0.0 || !threshold.is_finite() {
        return Err(Error::Domain("tail threshold is zero or non-finite".into()));
    }
    let sum: f64 = abs[..k].iter().map(|x| (x / threshold).ln()).sum();
    if sum <= 0.0 {
        return Err(Error::Domain("top order statistics are all tied".into()));
    }
    Ok(k as f64 / sum)
}

/// One quantile bin of the conditional-volatility table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionalBin {
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
    pub mean_current: f64,
    pub mean_next: f64,
    pub std_error_next: f64,
}

/// Bins `|r(t)|` into equal-count quantile bins and reports the mean of `|r(t+1)|` in each.
///
/// A table rising with the bin index shows that large moves are followed by large moves.
pub fn conditional_variance_diagnostic(returns: &[f64], n_bins: usize) -> Result<Vec<ConditionalBin>> {
    if n_bins == 0 {
        return Err(Error::Domain("need at least one bin".into()));
    }
    let pairs = returns.len().saturating_sub(1);
    if pairs < 10 * n_bins {
        return Err(Error::InsufficientData {
            needed: 10 * n_bins + 1,
            got: returns.len(),
        });
    }
    let mut pts: Vec<(f64, f64)> = returns.windows(2).map(|w| (w[0].abs(), w[1].abs())).collect();
    pts.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
    if pts[0].0 == pts[pts.len() - 1].0 {
        return Err(Error::Domain(
            "current |r| is constant; quantile bins are degenerate".into(),
        ));
    }
    let mut bins = Vec::with_capacity(n_bins);
    for b in 0..n_bins {
        let lo = b * pts.len() / n_bins;
        let hi = (b + 1) * pts.len() / n_bins;
        let chunk = &pts[lo..hi];
        let c = chunk.len() as f64;
        let mean_cur = chunk.iter().map(|p| p.0).sum::<f64>() / c;
        let mean_next = chunk.iter().map(|p| p.1).sum::<f64>() / c;
        let var_next = chunk.iter().map(|p| (p.1 - mean_next).powi(2)).sum::<f64>() / (c - 1.0).max(1.0);
        bins.push(ConditionalBin {
            lower: chunk[0].0,
            upper: chunk[chunk.len() - 1].0,
            count: chunk.len(),
            mean_current: mean_cur,
            mean_next,
            std_error_next: (var_next / c).sqrt(),
        });
    }
    Ok(bins)
}

/// Effective power-law exponent of a decaying correlation function.
///
/// This is a descriptive fit over a finite lag window. The value depends on
/// the model parameters and the window and is not a universal constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectiveExponent {
    pub exponent: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub lags_used: usize,
}

/// Least-squares slope of `ln rho(k)` against `ln k` over positive values in `from..=to`,
/// reported as `rho ~ k^-exponent` with a 95% normal-approximation interval.
pub fn effective_decay_exponent(acf: &AcfReport, from: usize, to: usize) -> Result<EffectiveExponent> {
    let pts: Vec<(f64, f64)> = acf
        .lags
        .iter()
        .zip(&acf.values)
        .filter(|(&l, &v)| l >= from.max(1) && l <= to && v > 0.0)
        .map(|(&l, &v)| ((l as f64).ln(), v.ln()))
        .collect();
    if pts.len() < 3 {
        return Err(Error::InsufficientData {
            needed: 3,
            got: pts.len(),
        });
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let resid: f64 = pts.iter().map(|p| (p.1 - my - slope * (p.0 - mx)).powi(2)).sum();
    let se = (resid / (n - 2.0) / sxx).sqrt();
    Ok(EffectiveExponent {
        exponent: -slope,
        ci_low: -slope - BAND_Z * se,
        ci_high: -slope + BAND_Z * se,
        lags_used: pts.len(),
    })
}
