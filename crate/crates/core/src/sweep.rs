//! Grid and random parameter sweeps over a base configuration.
//!
//! A sweep file has the sections of a config file plus:
//!
//! ```toml
//! mode = "grid"          # or "random"
//! samples = 20           # random mode
//! sample_seed = 7        # random mode
//!
//! [grid]
//! b = [1.5, 1.6]
//!
//! [ranges]               # random mode: uniform on [low, high]
//! gamma = [0.005, 0.02]
//! ```
//!
//! Each point runs into its own `run_NNNN` directory, laid out like a single
//! simulation. `index.csv` lists every point with its status and summary.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{SimConfig, SimOutput};
use crate::error::{invalid, Error, Result};
use crate::io::{simulate_to_dir, write_table, ConfigFile, ModelSection, RunSection, SelfOrgSection};
use crate::rng::SimRng;
use crate::stats::{drop_burn_in, excess_kurtosis, DEFAULT_BURN_IN_FRACTION};
use crate::strategy::{median_duration, residence_times};

/// Names accepted in `[grid]` and `[ranges]`.
pub const SWEEPABLE: [&str; 13] = [
    "b",
    "gamma",
    "sigma",
    "p_f",
    "base_rate",
    "r",
    "delta",
    "horizon",
    "n_initial",
    "seed",
    "initial_chartist_fraction",
    "theta_in",
    "theta_out",
];

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepMode {
    #[default]
    Grid,
    Random,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSpec {
    pub mode: SweepMode,
    pub samples: usize,
    pub sample_seed: u64,
    pub run: RunSection,
    pub model: ModelSection,
    pub selforg: Option<SelfOrgSection>,
    pub grid: BTreeMap<String, Vec<f64>>,
    pub ranges: BTreeMap<String, [f64; 2]>,
}

/// One configuration of a sweep with the values assigned to it.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub index: usize,
    pub assignments: Vec<(String, f64)>,
    pub config: SimConfig,
}

pub fn parse_sweep_str(text: &str) -> Result<SweepSpec> {
    toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
}

fn check_name(name: &str) -> Result<()> {
    if SWEEPABLE.contains(&name) {
        Ok(())
    } else {
        Err(Error::Parse(format!(
            "`{name}` cannot be swept; choose from {}",
            SWEEPABLE.join(", ")
        )))
    }
}

fn as_count(name: &'static str, v: f64) -> Result<usize> {
    if v >= 0.0 && v.fract() == 0.0 && v <= u32::MAX as f64 {
        Ok(v as usize)
    } else {
        Err(invalid(name, format!("must be a non-negative integer, got {v}")))
    }
}

fn assign(file: &mut ConfigFile, name: &str, v: f64) -> Result<()> {
    match name {
        "b" => file.model.b = v,
        "gamma" => file.model.gamma = v,
        "sigma" => file.model.sigma = v,
        "p_f" => file.model.p_f = v,
        "base_rate" => file.model.base_rate = v,
        "r" => file.model.r = v,
        "delta" => file.model.delta = v,
        "horizon" => {
            file.model.horizon = Some(as_count("horizon", v)?);
            file.model.horizons = None;
            file.model.horizon_weights = None;
        }
        "n_initial" => file.run.n_initial = as_count("n_initial", v)?,
        "seed" => file.run.seed = as_count("seed", v)? as u64,
        "initial_chartist_fraction" => file.run.initial_chartist_fraction = v,
        "theta_in" | "theta_out" => {
            let s = file
                .selforg
                .as_mut()
                .ok_or_else(|| Error::Parse(format!("`{name}` needs a [selforg] section")))?;
            if name == "theta_in" {
                s.theta_in = v;
            } else {
                s.theta_out = v;
            }
        }
        other => check_name(other)?,
    }
    Ok(())
}

impl SweepSpec {
    fn base(&self) -> ConfigFile {
        ConfigFile {
            run: self.run.clone(),
            model: self.model.clone(),
            selforg: self.selforg.clone(),
        }
    }

    fn assignments(&self) -> Result<Vec<Vec<(String, f64)>>> {
        match self.mode {
            SweepMode::Grid => {
                if !self.ranges.is_empty() {
                    return Err(Error::Parse("[ranges] is only used in random mode".into()));
                }
                let mut points: Vec<Vec<(String, f64)>> = vec![Vec::new()];
                for (name, values) in &self.grid {
                    check_name(name)?;
                    if values.is_empty() {
                        return Err(Error::Parse(format!("grid axis `{name}` is empty")));
                    }
                    points = points
                        .into_iter()
                        .flat_map(|p| {
                            values.iter().map(move |&v| {
                                let mut q = p.clone();
                                q.push((name.clone(), v));
                                q
                            })
                        })
                        .collect();
                }
                Ok(points)
            }
            SweepMode::Random => {
                if !self.grid.is_empty() {
                    return Err(Error::Parse("[grid] is only used in grid mode".into()));
                }
                if self.samples == 0 {
                    return Err(invalid("samples", "random mode needs samples >= 1"));
                }
                for (name, [lo, hi]) in &self.ranges {
                    check_name(name)?;
                    if lo.partial_cmp(hi).is_none_or(|o| o.is_gt()) {
                        return Err(Error::Parse(format!("range `{name}` has low > high")));
                    }
                }
                let mut rng = SimRng::new(self.sample_seed);
                let integer = |n: &str| matches!(n, "horizon" | "n_initial" | "seed");
                Ok((0..self.samples)
                    .map(|_| {
                        self.ranges
                            .iter()
                            .map(|(name, [lo, hi])| {
                                let v = lo + (hi - lo) * rng.uniform();
                                (name.clone(), if integer(name) { v.round() } else { v })
                            })
                            .collect()
                    })
                    .collect())
            }
        }
    }

    /// Every sweep point, validated.
    pub fn expand(&self) -> Result<Vec<SweepPoint>> {
        self.assignments()?
            .into_iter()
            .enumerate()
            .map(|(index, assignments)| {
                let mut file = self.base();
                for (name, v) in &assignments {
                    assign(&mut file, name, *v)?;
                }
                Ok(SweepPoint {
                    index,
                    assignments,
                    config: file.to_config()?,
                })
            })
            .collect()
    }
}

/// Headline numbers of one run, computed after the default burn-in fraction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub excess_kurtosis: Option<f64>,
    pub mean_chartist_fraction: f64,
    pub mean_n: f64,
    pub mean_rolling_variance: Option<f64>,
    pub median_fundamentalist_residence: Option<f64>,
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len().max(1) as f64
}

pub fn summarize(out: &SimOutput) -> RunSummary {
    let ret = drop_burn_in(&out.ret, DEFAULT_BURN_IN_FRACTION);
    let x = out.chartist_fraction();
    let x = drop_burn_in(&x, DEFAULT_BURN_IN_FRACTION);
    let n: Vec<f64> = out.n.iter().map(|&v| v as f64).collect();
    let rv = drop_burn_in(&out.rolling_variance, DEFAULT_BURN_IN_FRACTION);
    RunSummary {
        excess_kurtosis: excess_kurtosis(ret).ok(),
        mean_chartist_fraction: mean(x),
        mean_n: mean(drop_burn_in(&n, DEFAULT_BURN_IN_FRACTION)),
        mean_rolling_variance: (!rv.is_empty()).then(|| mean(rv)),
        median_fundamentalist_residence: residence_times(x, 0.3, 0.7)
            .ok()
            .and_then(|r| median_duration(&r.fundamentalist)),
    }
}

/// Outcome of one sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub point: SweepPoint,
    pub dir: String,
    pub status: String,
    pub summary: Option<RunSummary>,
}

pub fn run_dir_name(index: usize) -> String {
    format!("run_{index:04}")
}

/// Runs all points on `max_parallel` threads and writes `index.csv` last.
pub fn run_sweep(spec: &SweepSpec, out_dir: &Path, max_parallel: usize) -> Result<Vec<SweepRow>> {
    let points = spec.expand()?;
    fs::create_dir_all(out_dir)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(max_parallel.max(1))
        .build()
        .map_err(|e| Error::Domain(format!("thread pool: {e}")))?;
    let rows: Vec<SweepRow> = pool.install(|| {
        points
            .into_par_iter()
            .map(|point| {
                let dir = run_dir_name(point.index);
                let (status, summary) = match simulate_to_dir(&point.config, &out_dir.join(&dir)) {
                    Ok((out, _)) => ("ok".to_string(), Some(summarize(&out))),
                    Err(Error::NumericOverflow { step, .. }) => (format!("overflow at step {step}"), None),
                    Err(e) => (format!("error: {e}"), None),
                };
                SweepRow {
                    point,
                    dir,
                    status,
                    summary,
                }
            })
            .collect()
    });
    write_index(out_dir, &rows)?;
    Ok(rows)
}

fn write_index(out_dir: &Path, rows: &[SweepRow]) -> Result<()> {
    let names: Vec<String> = rows
        .first()
        .map(|r| r.point.assignments.iter().map(|(n, _)| n.clone()).collect())
        .unwrap_or_default();
    let mut header: Vec<&str> = vec!["run", "dir"];
    header.extend(names.iter().map(String::as_str));
    header.extend([
        "status",
        "excess_kurtosis",
        "mean_chartist_fraction",
        "mean_n",
        "mean_rolling_variance",
        "median_fundamentalist_residence",
    ]);
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let mut cells = vec![r.point.index.to_string(), r.dir.clone()];
            cells.extend(r.point.assignments.iter().map(|(_, v)| v.to_string()));
            cells.push(r.status.clone());
            match &r.summary {
                Some(s) => cells.extend([
                    opt(s.excess_kurtosis),
                    s.mean_chartist_fraction.to_string(),
                    s.mean_n.to_string(),
                    opt(s.mean_rolling_variance),
                    opt(s.median_fundamentalist_residence),
                ]),
                None => cells.extend(std::iter::repeat_n(String::new(), 5)),
            }
            cells
        })
        .collect();
    write_table(&out_dir.join("index.csv"), &header, &table)
}
