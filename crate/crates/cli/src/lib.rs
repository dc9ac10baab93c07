//! Command-line front end for `relay-goodput`.
//!
//! ```text
//! relay-goodput point    --mode af --snr-db 10 --k 0.5 --rate 4
//! relay-goodput sweep    --mode both --rate 0.1:12:120
//! relay-goodput optimize --rate 2,4,6,8,10
//! relay-goodput validate --mode df --rate 1,4,8 --trials 1000000 --out v.csv
//! ```
//!
//! Every setting can also come from a `key = value` file given with
//! `--config`; flags win over the file.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

pub mod commands;
pub mod run_spec;
pub mod table;

pub use commands::{execute, Outcome};
pub use run_spec::{parse_config, Axis, Command, Format, ModeSel, RunSpec};
pub use table::{Cell, Report, Table};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Model(#[from] relay_goodput::Error),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Parser)]
#[command(name = "relay-goodput", version, about = "Goodput of ARQ relay networks over Rayleigh fading")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Debug, Subcommand)]
enum Sub {
    /// Evaluate one operating point, printing every intermediate quantity.
    Point,
    /// Tabulate goodput over one or two swept parameters.
    Sweep,
    /// Optimal relay location and/or rate.
    Optimize,
    /// Monte Carlo estimate of slots per codeword.
    Simulate,
    /// Simulation against the closed form, with z-scores and a verdict.
    Validate,
}

#[derive(Debug, Args)]
struct Opts {
    /// single, af, df or both (af and df) [default: both]
    #[arg(long, global = true)]
    mode: Option<String>,
    /// Average SNR in dB: value, start:stop:count or a,b,c [default: 10]
    #[arg(long, global = true, allow_hyphen_values = true)]
    snr_db: Option<String>,
    /// Path-loss exponent [default: 3.12]
    #[arg(long, global = true)]
    alpha: Option<String>,
    /// Relay location in (0, 1): value, range or list [default: 0.5]
    #[arg(long, global = true)]
    k: Option<String>,
    /// Rate in bits per channel use: value, range or list
    #[arg(long, global = true)]
    rate: Option<String>,
    /// Monte Carlo trials per point [default: 1000000]
    #[arg(long, global = true)]
    trials: Option<String>,
    /// Simulation seed [default: 1]
    #[arg(long, global = true)]
    seed: Option<String>,
    /// Per-codeword slot cap in simulations [default: 10000]
    #[arg(long, global = true)]
    max_slots: Option<String>,
    /// Fixed direct-link outage probability (switches simulations to fixed outages)
    #[arg(long, global = true)]
    eps_sd: Option<String>,
    /// Fixed outage of the relay path (af) or source-relay link (df)
    #[arg(long, global = true)]
    eps_path2: Option<String>,
    /// Fixed relay-destination outage (df)
    #[arg(long, global = true)]
    eps_rd: Option<String>,
    /// Same fixed outage values for every link not given separately
    #[arg(long, global = true)]
    eps_grid: Option<String>,
    /// Lower end of the rate search [default: 0.05]
    #[arg(long, global = true)]
    rate_min: Option<String>,
    /// Upper end of the rate search [default: 20]
    #[arg(long, global = true)]
    rate_max: Option<String>,
    /// csv or json [default: csv]
    #[arg(long, global = true)]
    format: Option<String>,
    /// Output file [default: stdout]
    #[arg(long, global = true)]
    out: Option<String>,
    /// Worker threads for simulations; results do not depend on it
    #[arg(long, global = true)]
    threads: Option<String>,
    /// key = value settings file; flags override it
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

impl Opts {
    fn settings(&self) -> Vec<(&'static str, &Option<String>)> {
        vec![
            ("mode", &self.mode),
            ("snr-db", &self.snr_db),
            ("alpha", &self.alpha),
            ("k", &self.k),
            ("rate", &self.rate),
            ("trials", &self.trials),
            ("seed", &self.seed),
            ("max-slots", &self.max_slots),
            ("eps-sd", &self.eps_sd),
            ("eps-path2", &self.eps_path2),
            ("eps-rd", &self.eps_rd),
            ("eps-grid", &self.eps_grid),
            ("rate-min", &self.rate_min),
            ("rate-max", &self.rate_max),
            ("format", &self.format),
            ("out", &self.out),
            ("threads", &self.threads),
        ]
    }
}

fn spec_from_cli(cli: Cli) -> Result<RunSpec, CliError> {
    let mut settings = match &cli.opts.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
                path: path.display().to_string(),
                source,
            })?;
            parse_config(&text)?
        }
        None => BTreeMap::new(),
    };
    for (key, value) in cli.opts.settings() {
        if let Some(v) = value {
            settings.insert(key.to_string(), v.clone());
        }
    }
    let command = match cli.command {
        Sub::Point => Command::Point,
        Sub::Sweep => Command::Sweep,
        Sub::Optimize => Command::Optimize,
        Sub::Simulate => Command::Simulate,
        Sub::Validate => Command::Validate,
    };
    RunSpec::from_settings(command, &settings)
}

/// Executes `spec` and writes the rendered output to `spec.out` (or
/// `stdout`). Returns the process exit status.
pub fn run_spec(spec: &RunSpec) -> Result<i32, CliError> {
    let outcome = execute(spec)?;
    let bytes = outcome.report.render(spec.format)?;
    match &spec.out {
        Some(path) => std::fs::write(path, &bytes).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        })?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(&bytes)
                .and_then(|_| stdout.flush())
                .map_err(|source| CliError::Io { path: "stdout".into(), source })?;
        }
    }
    if let Some(line) = &outcome.summary_line {
        eprintln!("{line}");
    }
    Ok(outcome.exit_code)
}

/// Full command-line entry point: 0 on success, 1 on usage or domain
/// errors, 2 when validation hard-fails.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    let result = spec_from_cli(cli).and_then(|spec| run_spec(&spec));
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
