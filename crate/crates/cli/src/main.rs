mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

/// Spaceport site selection: hazard scans, launch costs and the site/mission
/// allocation model.
#[derive(Debug, Parser)]
#[command(name = "spaceport", version, about)]
pub struct Cli {
    /// Run configuration (TOML).
    #[arg(long, global = true, default_value = "spaceport.toml")]
    pub config: PathBuf,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Worker threads for scans and sweeps (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Overrides `cluster.seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Also solve by exhaustive enumeration and compare (small instances).
    #[arg(long, global = true)]
    pub oracle: bool,
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load every configured dataset and report row counts.
    Validate,
    /// Annual launch series and the demand forecast.
    Forecast,
    /// Cluster the launch history into mission types.
    Cluster,
    /// Feasible azimuths and mission corridors at one buffer angle.
    Scan {
        #[arg(long)]
        buffer: Option<f64>,
        #[arg(long)]
        traffic: Option<String>,
    },
    /// Solve one configuration.
    Plan {
        #[arg(long)]
        buffer: Option<f64>,
        #[arg(long)]
        traffic: Option<String>,
        #[arg(long)]
        scenario: Option<String>,
    },
    /// Solve every configuration of the sweep grid.
    Sweep,
    /// Write the model of one configuration as MPS.
    ExportMps {
        #[arg(long)]
        buffer: Option<f64>,
        #[arg(long)]
        traffic: Option<String>,
        #[arg(long)]
        scenario: Option<String>,
    },
    /// Print the tables of a finished sweep.
    Report,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    if let Some(j) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(j.max(1)).build_global() {
            log::warn!("thread pool: {e}");
        }
    }
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(commands::CliError::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(commands::CliError::Domain(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
