use std::path::PathBuf;

use clap::{Parser, Subcommand};
use drought_core::ingest::write_observations;
use drought_core::series::TimeStamp;
use log::info;

use crate::config::RunConfig;
use crate::run::{cmd_analyze, cmd_si, cmd_smi, Report};
use crate::synth::{synthesize, SynthOptions};
use crate::CliError;

#[derive(Debug, Parser)]
#[command(name = "drought", version, about = "Standardized uni- and multivariate drought indices")]
pub struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Worker threads (defaults to the config value, then to all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Seed for synthetic data; overrides the config value.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Univariate index per variable and time scale.
    Si,
    /// Multivariate indices through a vine copula.
    Smi,
    /// Area fractions, event peaks and tau maps from index files.
    Analyze {
        /// Extra index files for area and event analysis.
        files: Vec<PathBuf>,
    },
    /// Writes synthetic observations to `<out>/observations.csv`.
    Synth {
        #[arg(long, default_value_t = 4)]
        pixels: usize,
        #[arg(long, default_value_t = 240)]
        months: usize,
        #[arg(long, default_value = "1961-01")]
        start: TimeStamp,
        /// Comma-separated variable names.
        #[arg(long, value_delimiter = ',', default_value = "PRE,PET")]
        variables: Vec<String>,
        /// Innovation correlation between the first and every other variable.
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        rho: f64,
        #[arg(long, default_value_t = 0.4, allow_negative_numbers = true)]
        phi: f64,
    },
}

fn config(cli: &Cli) -> Result<RunConfig, CliError> {
    let path = cli.config.as_ref().ok_or_else(|| CliError::Config {
        field: "--config".into(),
        reason: "required for this subcommand".into(),
    })?;
    let mut cfg = RunConfig::load(path)?;
    if cli.threads.is_some() {
        cfg.threads = cli.threads;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

/// Runs one parsed invocation. Partial pixel failures still return `Ok`.
pub fn execute(cli: &Cli) -> Result<Report, CliError> {
    let report = match &cli.command {
        Command::Si => cmd_si(&config(cli)?, &cli.out)?,
        Command::Smi => cmd_smi(&config(cli)?, &cli.out)?,
        Command::Analyze { files } => cmd_analyze(&config(cli)?, files, &cli.out)?,
        Command::Synth {
            pixels,
            months,
            start,
            variables,
            rho,
            phi,
        } => {
            if !(rho.abs() < 1.0) {
                return Err(CliError::Config {
                    field: "--rho".into(),
                    reason: "must lie in (-1, 1)".into(),
                });
            }
            if !(phi.abs() < 1.0) {
                return Err(CliError::Config {
                    field: "--phi".into(),
                    reason: "must lie in (-1, 1)".into(),
                });
            }
            let opts = SynthOptions {
                pixels: *pixels,
                months: *months,
                start: *start,
                variables: variables.clone(),
                rho: *rho,
                phi: *phi,
                seed: cli.seed.unwrap_or(1),
            };
            std::fs::create_dir_all(&cli.out).map_err(|e| CliError::io(&cli.out, e))?;
            let path = cli.out.join("observations.csv");
            let file = std::fs::File::create(&path).map_err(|e| CliError::io(&path, e))?;
            write_observations(std::io::BufWriter::new(file), &synthesize(&opts))
                .map_err(|e| CliError::Data(e.to_string()))?;
            Report {
                files: vec![path],
                pixels_ok: *pixels,
                failures: Vec::new(),
            }
        }
    };
    if report.all_failed() {
        return Err(CliError::AllPixelsFailed(report.failures.len()));
    }
    info!("wrote {} files", report.files.len());
    Ok(report)
}
