use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fcsim_core::engine::{run_ensemble, NPolicy, SimConfig};
use fcsim_core::io::{parse_config, read_timeseries, simulate_to_dir, unix_now, write_run};
use fcsim_core::presets::load_preset;
use fcsim_core::report::{stats_report, write_stats_report, StatsOptions};
use fcsim_core::stats::VolatilityMode;
use fcsim_core::sweep::{parse_sweep_str, run_sweep};
use fcsim_core::{Error, SelfOrgPolicy};

#[derive(Parser)]
#[command(name = "fcsim", version, about = "Fundamentalist/chartist market simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct OutArg {
    /// Output directory.
    #[arg(long, env = "FCSIM_OUT_DIR", default_value = "fcsim-out")]
    out: PathBuf,
}

#[derive(Args)]
struct RunOverrides {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    record_every: Option<u64>,
    /// Steps skipped before recording starts.
    #[arg(long)]
    burn_in: Option<u64>,
}

impl RunOverrides {
    fn apply(&self, cfg: &mut SimConfig) {
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(r) = self.record_every {
            cfg.record_every = r;
        }
        if let Some(b) = self.burn_in {
            cfg.burn_in = b;
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation from a config file.
    Simulate {
        config: PathBuf,
        #[command(flatten)]
        out: OutArg,
        #[command(flatten)]
        overrides: RunOverrides,
    },
    /// Run one simulation with a self-organizing population.
    Selforg {
        config: PathBuf,
        #[command(flatten)]
        out: OutArg,
        #[command(flatten)]
        overrides: RunOverrides,
    },
    /// Run every member of a named preset.
    Preset {
        name: String,
        #[command(flatten)]
        out: OutArg,
        #[command(flatten)]
        overrides: RunOverrides,
        #[arg(long, default_value_t = 1)]
        max_parallel: usize,
    },
    /// Compute the stylized-facts battery for a time-series file.
    Stats {
        timeseries: PathBuf,
        #[command(flatten)]
        out: OutArg,
        #[arg(long, default_value_t = 100)]
        max_lag: usize,
        #[arg(long, value_enum, default_value = "abs")]
        volatility: VolArg,
        #[arg(long, default_value_t = 1)]
        smoothing_window: usize,
        #[arg(long, default_value_t = 0.05)]
        hill_k_fraction: f64,
        #[arg(long, default_value_t = 10)]
        bins: usize,
        /// Leading share of the series discarded.
        #[arg(long, default_value_t = 0.1)]
        burn_in_fraction: f64,
    },
    /// Run a grid or random parameter sweep.
    Sweep {
        spec: PathBuf,
        #[command(flatten)]
        out: OutArg,
        #[arg(long, default_value_t = 1)]
        max_parallel: usize,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum VolArg {
    Abs,
    Squared,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidParameter { .. } | Error::Parse(_) | Error::UnknownPreset(_) => 2,
        _ => 3,
    }
}

fn simulate(config: &Path, out: &Path, overrides: &RunOverrides, force_selforg: bool) -> Result<(), Error> {
    let mut cfg = parse_config(config)?;
    overrides.apply(&mut cfg);
    if force_selforg && matches!(cfg.n_policy, NPolicy::FixedN) {
        cfg.n_policy = NPolicy::SelfOrganizing(SelfOrgPolicy::default());
    }
    cfg.validate()?;
    let (output, _) = simulate_to_dir(&cfg, out)?;
    println!("wrote {} records to {}", output.len(), out.display());
    Ok(())
}

fn preset(name: &str, out: &Path, overrides: &RunOverrides, max_parallel: usize) -> Result<(), Error> {
    let preset = load_preset(name)?;
    let mut configs: Vec<SimConfig> = preset.members.iter().map(|m| m.config.clone()).collect();
    for cfg in &mut configs {
        overrides.apply(cfg);
        cfg.validate()?;
    }
    let root = out.join(&preset.name);
    fs::create_dir_all(&root)?;
    let started = unix_now();
    let results = run_ensemble(&configs, max_parallel)?;
    let mut first_error = None;
    for (member, result) in preset.members.iter().zip(results) {
        let dir = root.join(&member.label);
        match result {
            Ok(output) => {
                write_run(&dir, &output, started, None)?;
                println!("{}: {} records", member.label, output.len());
            }
            Err(Error::NumericOverflow { step, price, partial }) => {
                let why = format!("numeric overflow at step {step}: price {price}");
                write_run(&dir, &partial, started, Some(why.clone()))?;
                eprintln!("{}: {why}", member.label);
                first_error.get_or_insert(Error::NumericOverflow { step, price, partial });
            }
            Err(e) => {
                eprintln!("{}: {e}", member.label);
                first_error.get_or_insert(e);
            }
        }
    }
    first_error.map_or(Ok(()), Err)
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Simulate { config, out, overrides } => simulate(&config, &out.out, &overrides, false),
        Command::Selforg { config, out, overrides } => simulate(&config, &out.out, &overrides, true),
        Command::Preset {
            name,
            out,
            overrides,
            max_parallel,
        } => preset(&name, &out.out, &overrides, max_parallel),
        Command::Stats {
            timeseries,
            out,
            max_lag,
            volatility,
            smoothing_window,
            hill_k_fraction,
            bins,
            burn_in_fraction,
        } => {
            let file = fs::File::open(&timeseries).map_err(|e| Error::Io(format!("{}: {e}", timeseries.display())))?;
            let ts = read_timeseries(std::io::BufReader::new(file))?;
            let opts = StatsOptions {
                max_lag,
                volatility: match volatility {
                    VolArg::Abs => VolatilityMode::Abs,
                    VolArg::Squared => VolatilityMode::Squared,
                },
                smoothing_window,
                hill_k_fraction,
                conditional_bins: bins,
                burn_in_fraction,
            };
            let report = stats_report(&ts.price, &opts)?;
            write_stats_report(&out.out, &report)?;
            println!(
                "n={} excess_kurtosis={} written to {}",
                report.returns.n,
                report.returns.excess_kurtosis,
                out.out.display()
            );
            Ok(())
        }
        Command::Sweep {
            spec,
            out,
            max_parallel,
        } => {
            let text = fs::read_to_string(&spec).map_err(|e| Error::Io(format!("{}: {e}", spec.display())))?;
            let spec = parse_sweep_str(&text)?;
            let rows = run_sweep(&spec, &out.out, max_parallel)?;
            let failed = rows.iter().filter(|r| r.status != "ok").count();
            println!(
                "{} runs, {failed} failed, index at {}",
                rows.len(),
                out.out.join("index.csv").display()
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
