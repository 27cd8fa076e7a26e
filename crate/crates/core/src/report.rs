//! The stylized-facts battery applied to one price series, plus its file output.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::io::{write_key_values, write_table};
use crate::stats::{
    autocorrelation, conditional_variance_diagnostic, drop_burn_in, effective_decay_exponent, hill_tail_index, returns,
    series_stats, volatility_series, AcfReport, ConditionalBin, EffectiveExponent, SeriesStats, VolatilityMode,
    DEFAULT_BURN_IN_FRACTION,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsOptions {
    pub max_lag: usize,
    pub volatility: VolatilityMode,
    pub smoothing_window: usize,
    pub hill_k_fraction: f64,
    pub conditional_bins: usize,
    pub burn_in_fraction: f64,
}

impl Default for StatsOptions {
    fn default() -> Self {
        StatsOptions {
            max_lag: 100,
            volatility: VolatilityMode::Abs,
            smoothing_window: 1,
            hill_k_fraction: 0.05,
            conditional_bins: 10,
            burn_in_fraction: DEFAULT_BURN_IN_FRACTION,
        }
    }
}

/// Results of the battery. Estimators that cannot run on the input are `None`
/// and the reason is kept in `skipped`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    pub returns: SeriesStats,
    pub return_acf: AcfReport,
    pub volatility_acf: Option<AcfReport>,
    pub hill_tail_index: Option<f64>,
    pub conditional: Option<Vec<ConditionalBin>>,
    pub decay_exponent: Option<EffectiveExponent>,
    pub skipped: Vec<(String, String)>,
}

fn keep<T>(skipped: &mut Vec<(String, String)>, name: &str, res: Result<T>) -> Option<T> {
    match res {
        Ok(v) => Some(v),
        Err(e) => {
            skipped.push((name.to_string(), e.to_string()));
            None
        }
    }
}

/// Runs every estimator on the returns of `prices` after dropping the burn-in.
pub fn stats_report(prices: &[f64], opts: &StatsOptions) -> Result<StatsReport> {
    let prices = drop_burn_in(prices, opts.burn_in_fraction);
    let r = returns(prices)?;
    let mut skipped = Vec::new();
    let return_stats = series_stats(&r)?;
    let return_acf = autocorrelation(&r, opts.max_lag)?;
    let volatility_acf = keep(
        &mut skipped,
        "volatility_acf",
        volatility_series(&r, opts.volatility, opts.smoothing_window).and_then(|v| autocorrelation(&v, opts.max_lag)),
    );
    let hill = keep(
        &mut skipped,
        "hill_tail_index",
        hill_tail_index(&r, opts.hill_k_fraction),
    );
    let conditional = keep(
        &mut skipped,
        "conditional",
        conditional_variance_diagnostic(&r, opts.conditional_bins),
    );
    let decay = match &volatility_acf {
        Some(acf) => keep(
            &mut skipped,
            "decay_exponent",
            effective_decay_exponent(acf, 1, opts.max_lag),
        ),
        None => None,
    };
    Ok(StatsReport {
        returns: return_stats,
        return_acf,
        volatility_acf,
        hill_tail_index: hill,
        conditional,
        decay_exponent: decay,
        skipped,
    })
}

/// Writes `summary.csv`, `acf.csv` and `conditional.csv` into `dir`.
pub fn write_stats_report(dir: &Path, report: &StatsReport) -> Result<()> {
    fs::create_dir_all(dir)?;
    let s = &report.returns;
    let mut rows: Vec<(String, String)> = vec![
        ("n".into(), s.n.to_string()),
        ("mean".into(), s.mean.to_string()),
        ("variance".into(), s.variance.to_string()),
        ("skewness".into(), s.skewness.to_string()),
        ("excess_kurtosis".into(), s.excess_kurtosis.to_string()),
        ("noise_band".into(), report.return_acf.noise_band.to_string()),
    ];
    if let Some(h) = report.hill_tail_index {
        rows.push(("hill_tail_index".into(), h.to_string()));
    }
    if let Some(d) = report.decay_exponent {
        rows.push(("effective_decay_exponent".into(), d.exponent.to_string()));
        rows.push(("effective_decay_exponent_ci_low".into(), d.ci_low.to_string()));
        rows.push(("effective_decay_exponent_ci_high".into(), d.ci_high.to_string()));
    }
    for (name, why) in &report.skipped {
        rows.push((format!("skipped_{name}"), why.clone()));
    }
    write_key_values(&dir.join("summary.csv"), &rows)?;

    let acf_rows: Vec<Vec<String>> = report
        .return_acf
        .lags
        .iter()
        .enumerate()
        .map(|(i, lag)| {
            vec![
                lag.to_string(),
                report.return_acf.values[i].to_string(),
                report
                    .volatility_acf
                    .as_ref()
                    .map(|v| v.values[i].to_string())
                    .unwrap_or_default(),
            ]
        })
        .collect();
    write_table(
        &dir.join("acf.csv"),
        &["lag", "return_acf", "volatility_acf"],
        &acf_rows,
    )?;

    let cond_rows: Vec<Vec<String>> = report
        .conditional
        .iter()
        .flatten()
        .map(|b| {
            vec![
                b.lower.to_string(),
                b.upper.to_string(),
                b.count.to_string(),
                b.mean_current.to_string(),
                b.mean_next.to_string(),
                b.std_error_next.to_string(),
            ]
        })
        .collect();
    write_table(
        &dir.join("conditional.csv"),
        &["lower", "upper", "count", "mean_current", "mean_next", "std_error_next"],
        &cond_rows,
    )
}
