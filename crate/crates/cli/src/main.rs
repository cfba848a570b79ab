use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use mobnet_cli::config;
use mobnet_cli::pipeline::{self, Scale, SynthOptions};
use mobnet_cli::CliError;
use mobnet_core::date::Date;
use mobnet_core::synth::ProviderProfile;

#[derive(Parser)]
#[command(
    name = "mobnet",
    version,
    about = "Daily human-mobility networks from location pings: construction, multi-scale metrics, and cross-source comparison"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic multi-provider dataset with ground truth
    Synth {
        /// Output directory for pings, tracts, truth, and config
        #[arg(long)]
        out: PathBuf,
        /// Tract grid side length (total tracts = side^2)
        #[arg(long, default_value_t = 10)]
        tracts_side: u32,
        /// Number of simulated devices
        #[arg(long, default_value_t = 5000)]
        devices: u32,
        /// World seed (geography, panels of devices, schedules)
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Emission seed (panels, ping cadence, noise, dropout)
        #[arg(long, default_value_t = 2)]
        emit_seed: u64,
        #[arg(long, default_value = "2020-02-01")]
        date_start: String,
        #[arg(long, default_value = "2020-02-29")]
        date_end: String,
        /// Provider profile label:penetration:interval_s:noise_m:dropout;
        /// repeatable, replaces the built-in three when given
        #[arg(long = "profile")]
        profiles: Vec<String>,
        /// Worker threads (0 = auto)
        #[arg(long, default_value_t = 0)]
        threads: usize,
    },
    /// Parse pings into stop and trip stores
    Ingest {
        #[arg(long)]
        config: PathBuf,
    },
    /// Build daily mobility networks from trip stores
    BuildNetwork {
        #[arg(long)]
        config: PathBuf,
    },
    /// Compute metric files at one scale
    Analyze {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum)]
        scale: ScaleArg,
    },
    /// Cross-source verdicts and figure data
    Compare {
        #[arg(long)]
        config: PathBuf,
    },
    /// Network-size summary table
    Report {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ScaleArg {
    Macro,
    Motif,
    Micro,
}

impl From<ScaleArg> for Scale {
    fn from(s: ScaleArg) -> Self {
        match s {
            ScaleArg::Macro => Scale::Macro,
            ScaleArg::Motif => Scale::Motif,
            ScaleArg::Micro => Scale::Micro,
        }
    }
}

fn parse_profile(spec: &str) -> Result<ProviderProfile, CliError> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 5 {
        return Err(CliError::Config(format!(
            "profile {spec:?}: expected label:penetration:interval_s:noise_m:dropout"
        )));
    }
    let bad = |field: &str| CliError::Config(format!("profile {spec:?}: bad {field}"));
    Ok(ProviderProfile {
        name: parts[0].to_string(),
        penetration: parts[1].parse().map_err(|_| bad("penetration"))?,
        ping_interval_s: parts[2].parse().map_err(|_| bad("interval"))?,
        noise_sigma_m: parts[3].parse().map_err(|_| bad("noise"))?,
        dropout_p: parts[4].parse().map_err(|_| bad("dropout"))?,
    })
}

fn parse_date(s: &str, what: &str) -> Result<Date, CliError> {
    s.parse()
        .map_err(|e| CliError::Config(format!("{what}: {e}")))
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Synth {
            out,
            tracts_side,
            devices,
            seed,
            emit_seed,
            date_start,
            date_end,
            profiles,
            threads,
        } => {
            if tracts_side < 2 {
                return Err(CliError::Config("tracts-side must be at least 2".into()));
            }
            if devices < 1 {
                return Err(CliError::Config("devices must be at least 1".into()));
            }
            let date_start = parse_date(&date_start, "date-start")?;
            let date_end = parse_date(&date_end, "date-end")?;
            if date_end < date_start {
                return Err(CliError::Config("date range is empty".into()));
            }
            let profiles = if profiles.is_empty() {
                pipeline::default_profiles()
            } else {
                profiles
                    .iter()
                    .map(|s| parse_profile(s))
                    .collect::<Result<_, _>>()?
            };
            let opts = SynthOptions {
                out_dir: out,
                tracts_side,
                devices,
                world_seed: seed,
                emit_seed,
                date_start,
                date_end,
                profiles,
            };
            pipeline::with_pool(threads, || pipeline::cmd_synth(&opts))
        }
        Command::Ingest { config } => {
            let cfg = config::load(&config)?;
            pipeline::with_pool(cfg.threads, || pipeline::cmd_ingest(&cfg))
        }
        Command::BuildNetwork { config } => {
            let cfg = config::load(&config)?;
            pipeline::with_pool(cfg.threads, || pipeline::cmd_build_network(&cfg))
        }
        Command::Analyze { config, scale } => {
            let cfg = config::load(&config)?;
            pipeline::with_pool(cfg.threads, || pipeline::cmd_analyze(&cfg, scale.into()))
        }
        Command::Compare { config } => {
            let cfg = config::load(&config)?;
            pipeline::with_pool(cfg.threads, || pipeline::cmd_compare(&cfg))
        }
        Command::Report { config } => {
            let cfg = config::load(&config)?;
            pipeline::with_pool(cfg.threads, || pipeline::cmd_report(&cfg))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
