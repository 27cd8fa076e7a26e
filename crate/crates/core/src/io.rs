//! Configuration files, time-series files and run manifests.
//!
//! Configs are TOML with three sections: `[run]`, `[model]` and an optional
//! `[selforg]` whose presence makes the population self-organizing. Unknown
//! keys are rejected.
//!
//! Numbers in every output file use Rust's shortest round-trip decimal
//! formatting, so parsing a written value gives back the identical `f64`.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::engine::{NPolicy, SimConfig, SimOutput};
use crate::error::{invalid, Error, Result};
use crate::params::{HorizonPolicy, ModelParams};
use crate::selforg::{EntrantRule, SelfOrgPolicy};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub n_initial: usize,
    pub steps: u64,
    pub seed: u64,
    pub record_every: u64,
    pub burn_in: u64,
    pub initial_chartist_fraction: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub variance_window: Option<usize>,
    pub frozen_population: bool,
}

impl Default for RunSection {
    fn default() -> Self {
        let d = SimConfig::default();
        RunSection {
            n_initial: d.n_initial,
            steps: d.steps,
            seed: d.seed,
            record_every: d.record_every,
            burn_in: d.burn_in,
            initial_chartist_fraction: d.initial_chartist_fraction,
            variance_window: d.variance_window,
            frozen_population: d.frozen_population,
        }
    }
}

/// Model constants. A single horizon is `horizon = M`; a mixture is
/// `horizons = [...]` with matching `horizon_weights = [...]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    pub b: f64,
    pub gamma: f64,
    pub sigma: f64,
    pub p_f: f64,
    pub base_rate: f64,
    pub r: f64,
    pub delta: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizons: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon_weights: Option<Vec<f64>>,
    pub exp_coupling: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub price_floor: Option<f64>,
}

impl Default for ModelSection {
    fn default() -> Self {
        let mut section = ModelSection::from(&ModelParams::default());
        section.horizon = None;
        section
    }
}

impl From<&ModelParams> for ModelSection {
    fn from(p: &ModelParams) -> Self {
        let (horizon, horizons, horizon_weights) = match &p.horizons {
            HorizonPolicy::Single(m) => (Some(*m), None, None),
            HorizonPolicy::Mixed(set) => (
                None,
                Some(set.iter().map(|&(m, _)| m).collect()),
                Some(set.iter().map(|&(_, w)| w).collect()),
            ),
        };
        ModelSection {
            b: p.b,
            gamma: p.gamma,
            sigma: p.sigma,
            p_f: p.p_f,
            base_rate: p.base_rate,
            r: p.r,
            delta: p.delta,
            horizon,
            horizons,
            horizon_weights,
            exp_coupling: p.exp_coupling,
            price_floor: p.price_floor,
        }
    }
}

impl ModelSection {
    pub fn to_params(&self) -> Result<ModelParams> {
        let horizons = match (self.horizon, &self.horizons, &self.horizon_weights) {
            (Some(_), Some(_), _) | (Some(_), _, Some(_)) => {
                return Err(invalid("horizon", "give either `horizon` or `horizons`, not both"))
            }
            (Some(m), None, None) => HorizonPolicy::Single(m),
            (None, None, None) => ModelParams::default().horizons,
            (None, Some(hs), ws) => {
                let ws = match ws {
                    Some(ws) => ws.clone(),
                    None => vec![1.0 / hs.len() as f64; hs.len()],
                };
                if ws.len() != hs.len() {
                    return Err(invalid(
                        "horizon_weights",
                        format!("expected {} weights, got {}", hs.len(), ws.len()),
                    ));
                }
                HorizonPolicy::Mixed(hs.iter().copied().zip(ws).collect())
            }
            (None, None, Some(_)) => return Err(invalid("horizon_weights", "weights given without `horizons`")),
        };
        let params = ModelParams {
            b: self.b,
            gamma: self.gamma,
            sigma: self.sigma,
            p_f: self.p_f,
            base_rate: self.base_rate,
            r: self.r,
            delta: self.delta,
            horizons,
            exp_coupling: self.exp_coupling,
            price_floor: self.price_floor,
        };
        params.validate()?;
        Ok(params)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SelfOrgSection {
    pub theta_in: f64,
    pub theta_out: f64,
    pub window: usize,
    pub flow_rate: usize,
    pub n_min: usize,
    pub n_max: usize,
    pub entrant: EntrantRule,
}

impl Default for SelfOrgSection {
    fn default() -> Self {
        SelfOrgSection::from(&SelfOrgPolicy::default())
    }
}

impl From<&SelfOrgPolicy> for SelfOrgSection {
    fn from(p: &SelfOrgPolicy) -> Self {
        SelfOrgSection {
            theta_in: p.theta_in,
            theta_out: p.theta_out,
            window: p.window,
            flow_rate: p.flow_rate,
            n_min: p.n_min,
            n_max: p.n_max,
            entrant: p.entrant,
        }
    }
}

impl From<&SelfOrgSection> for SelfOrgPolicy {
    fn from(s: &SelfOrgSection) -> Self {
        SelfOrgPolicy {
            theta_in: s.theta_in,
            theta_out: s.theta_out,
            window: s.window,
            flow_rate: s.flow_rate,
            n_min: s.n_min,
            n_max: s.n_max,
            entrant: s.entrant,
        }
    }
}

/// On-disk layout of a simulation config.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConfigFile {
    pub run: RunSection,
    pub model: ModelSection,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub selforg: Option<SelfOrgSection>,
}

impl ConfigFile {
    pub fn to_config(&self) -> Result<SimConfig> {
        let params = self.model.to_params()?;
        let n_policy = match &self.selforg {
            Some(s) => NPolicy::SelfOrganizing(SelfOrgPolicy::from(s)),
            None => NPolicy::FixedN,
        };
        let config = SimConfig {
            params,
            n_initial: self.run.n_initial,
            n_policy,
            steps: self.run.steps,
            seed: self.run.seed,
            record_every: self.run.record_every,
            burn_in: self.run.burn_in,
            initial_chartist_fraction: self.run.initial_chartist_fraction,
            variance_window: self.run.variance_window,
            frozen_population: self.run.frozen_population,
        };
        config.validate()?;
        Ok(config)
    }
}

impl From<&SimConfig> for ConfigFile {
    fn from(c: &SimConfig) -> Self {
        ConfigFile {
            run: RunSection {
                n_initial: c.n_initial,
                steps: c.steps,
                seed: c.seed,
                record_every: c.record_every,
                burn_in: c.burn_in,
                initial_chartist_fraction: c.initial_chartist_fraction,
                variance_window: c.variance_window,
                frozen_population: c.frozen_population,
            },
            model: ModelSection::from(&c.params),
            selforg: match &c.n_policy {
                NPolicy::SelfOrganizing(p) => Some(SelfOrgSection::from(p)),
                NPolicy::FixedN => None,
            },
        }
    }
}

/// Parses and validates a config from TOML text.
pub fn parse_config_str(text: &str) -> Result<SimConfig> {
    let file: ConfigFile = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    file.to_config()
}

pub fn parse_config(path: &Path) -> Result<SimConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_config_str(&text).map_err(|e| match e {
        Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn write_config(config: &SimConfig) -> String {
    toml::to_string(&ConfigFile::from(config)).expect("config sections always serialize")
}

/// Column order of the time-series file.
pub const TIMESERIES_HEADER: [&str; 7] = ["step", "price", "return", "N_c", "N_f", "N", "rolling_variance"];

/// Writes one header line and one row per recorded step.
pub fn write_timeseries<W: Write>(output: &SimOutput, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let csv_err = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(TIMESERIES_HEADER).map_err(csv_err)?;
    for i in 0..output.len() {
        let var = output
            .rolling_variance
            .get(i)
            .map(|v| v.to_string())
            .unwrap_or_default();
        w.write_record([
            output.step[i].to_string(),
            output.price[i].to_string(),
            output.ret[i].to_string(),
            output.n_c[i].to_string(),
            output.n_f[i].to_string(),
            output.n[i].to_string(),
            var,
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Columns read back from a time-series file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Timeseries {
    pub step: Vec<u64>,
    pub price: Vec<f64>,
    pub ret: Vec<f64>,
    pub n_c: Vec<usize>,
    pub n_f: Vec<usize>,
    pub n: Vec<usize>,
    pub rolling_variance: Vec<f64>,
}

pub fn read_timeseries<R: Read>(reader: R) -> Result<Timeseries> {
    let mut r = csv::Reader::from_reader(reader);
    let headers = r.headers().map_err(|e| Error::Parse(e.to_string()))?.clone();
    if headers.iter().ne(TIMESERIES_HEADER) {
        return Err(Error::Parse(format!(
            "unexpected header `{}`",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut ts = Timeseries::default();
    for (line, record) in r.records().enumerate() {
        let record = record.map_err(|e| Error::Parse(e.to_string()))?;
        let field = |i: usize| -> Result<&str> {
            record
                .get(i)
                .ok_or_else(|| Error::Parse(format!("row {}: missing column {}", line + 2, TIMESERIES_HEADER[i])))
        };
        let bad = |i: usize| {
            Error::Parse(format!(
                "row {}: bad value in column {}",
                line + 2,
                TIMESERIES_HEADER[i]
            ))
        };
        ts.step.push(field(0)?.parse().map_err(|_| bad(0))?);
        ts.price.push(field(1)?.parse().map_err(|_| bad(1))?);
        ts.ret.push(field(2)?.parse().map_err(|_| bad(2))?);
        ts.n_c.push(field(3)?.parse().map_err(|_| bad(3))?);
        ts.n_f.push(field(4)?.parse().map_err(|_| bad(4))?);
        ts.n.push(field(5)?.parse().map_err(|_| bad(5))?);
        let v = field(6)?;
        if !v.is_empty() {
            ts.rolling_variance.push(v.parse().map_err(|_| bad(6))?);
        }
    }
    Ok(ts)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// Path relative to the run directory.
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

/// Written after every other file of a run; its presence marks the run complete.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: ConfigFile,
    pub seed: u64,
    pub version: String,
    /// Unix time in seconds.
    pub started: f64,
    pub finished: f64,
    /// Set when the run aborted early.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub aborted: Option<String>,
    pub files: Vec<ManifestEntry>,
}

pub const MANIFEST_FILE: &str = "manifest.json";
pub const TIMESERIES_FILE: &str = "timeseries.csv";
pub const CONFIG_FILE: &str = "config.toml";

pub fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

/// Collects manifest entries for `files` (relative to `dir`) and writes the manifest.
pub fn write_manifest(
    dir: &Path,
    config: &SimConfig,
    started: f64,
    aborted: Option<String>,
    files: &[&str],
) -> Result<RunManifest> {
    let mut entries = Vec::with_capacity(files.len());
    for name in files {
        let bytes = fs::read(dir.join(name))?;
        entries.push(ManifestEntry {
            path: (*name).to_string(),
            bytes: bytes.len() as u64,
            sha256: sha256_hex(&bytes),
        });
    }
    let manifest = RunManifest {
        config: ConfigFile::from(config),
        seed: config.seed,
        version: env!("CARGO_PKG_VERSION").to_string(),
        started,
        finished: unix_now(),
        aborted,
        files: entries,
    };
    let json = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Io(e.to_string()))?;
    fs::write(dir.join(MANIFEST_FILE), json + "\n")?;
    Ok(manifest)
}

/// Writes config echo, time series and (last) the manifest of one run into `dir`.
pub fn write_run(dir: &Path, output: &SimOutput, started: f64, aborted: Option<String>) -> Result<RunManifest> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(CONFIG_FILE), write_config(&output.config))?;
    let file = fs::File::create(dir.join(TIMESERIES_FILE))?;
    write_timeseries(output, std::io::BufWriter::new(file))?;
    write_manifest(dir, &output.config, started, aborted, &[CONFIG_FILE, TIMESERIES_FILE])
}

/// Runs `config` and writes its files into `dir`. An overflow still writes
/// the partial output, flagged in the manifest, before returning the error.
pub fn simulate_to_dir(config: &SimConfig, dir: &Path) -> Result<(SimOutput, RunManifest)> {
    let started = unix_now();
    match crate::engine::run_simulation(config) {
        Ok(out) => {
            let manifest = write_run(dir, &out, started, None)?;
            Ok((out, manifest))
        }
        Err(Error::NumericOverflow { step, price, partial }) => {
            write_run(
                dir,
                &partial,
                started,
                Some(format!("numeric overflow at step {step}: price {price}")),
            )?;
            Err(Error::NumericOverflow { step, price, partial })
        }
        Err(e) => Err(e),
    }
}

/// Writes a two-column `key,value` table.
pub fn write_key_values(path: &Path, rows: &[(String, String)]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Io(e.to_string()))?;
    w.write_record(["key", "value"]).map_err(|e| Error::Io(e.to_string()))?;
    for (k, v) in rows {
        w.write_record([k, v]).map_err(|e| Error::Io(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// Writes a header and rows of pre-formatted cells.
pub fn write_table(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Io(e.to_string()))?;
    w.write_record(header).map_err(|e| Error::Io(e.to_string()))?;
    for row in rows {
        w.write_record(row).map_err(|e| Error::Io(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}
