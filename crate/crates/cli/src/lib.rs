//! Command-line driver: training runs, noise sweeps, link prediction,
//! gradient checks, parameter accounting and dataset generation.

pub mod commands;
pub mod config;
pub mod error;
pub mod plot;
pub mod report;

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

pub use config::ExperimentConfig;
pub use error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(
    name = "qgat",
    version,
    about = "Quantum graph attention experiments at desk scale"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// TOML experiment configuration; built-in defaults when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Directory for every artifact of the run.
    #[arg(long, global = true, value_name = "DIR", default_value = "runs")]
    pub out: PathBuf,

    /// Seeds as `0,1,2` or `0..5`; replaces `seeds` from the config.
    #[arg(long, global = true, value_name = "LIST")]
    pub seeds: Option<String>,

    /// Dotted config override such as `training.lr=1e-3`; repeatable.
    #[arg(long = "override", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,

    /// Worker threads for independent runs; defaults to the available cores.
    #[arg(long, global = true, value_name = "N")]
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Train one model per seed and report mean ± std of the test metric.
    Train,
    /// Train every model at every noise level and seed; write CSV and SVG.
    NoiseSweep,
    /// Edge split, training and Hits@K / MRR evaluation per seed.
    Linkpred,
    /// Finite-difference check of every analytic gradient.
    Gradcheck {
        /// Adds an offset to analytic gradients of matching tensors.
        #[arg(long, hide = true, value_name = "COMPONENT/TENSOR")]
        corrupt: Option<String>,
        #[arg(long, hide = true, default_value_t = 1e-3)]
        corrupt_offset: f64,
    },
    /// Trainable parameter counts of qgat, gat and gatv2 at the configured sizes.
    Params {
        /// Input feature width; taken from the data config when omitted.
        #[arg(long)]
        in_dim: Option<usize>,
        /// Output width; taken from the data config when omitted.
        #[arg(long)]
        out_dim: Option<usize>,
    },
    /// Generate the configured dataset as JSON bundles.
    Synth,
    /// Redraw sweep figures from their CSV files.
    Plot {
        #[arg(required = true, value_name = "CSV")]
        csv: Vec<PathBuf>,
    },
}

/// Everything a subcommand needs, with the configuration fully resolved.
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub command: Command,
    pub config_path: Option<PathBuf>,
    pub config: ExperimentConfig,
    pub out: PathBuf,
    pub jobs: usize,
}

impl ExperimentSpec {
    pub fn from_cli(cli: &Cli) -> CliResult<Self> {
        let mut config = ExperimentConfig::load(cli.config.as_deref(), &cli.overrides)?;
        if let Some(s) = &cli.seeds {
            config.seeds = config::parse_seeds(s)?;
        }
        let jobs = match cli.jobs {
            Some(0) => return Err(CliError::Usage("--jobs must be at least 1".into())),
            Some(n) => n,
            None => std::thread::available_parallelism().map_or(1, |n| n.get()),
        };
        Ok(Self {
            command: cli.command.clone(),
            config_path: cli.config.clone(),
            config,
            out: cli.out.clone(),
            jobs,
        })
    }

    /// Creates the output directory and writes the effective configuration.
    pub fn prepare_out(&self) -> CliResult<PathBuf> {
        std::fs::create_dir_all(&self.out).map_err(|e| CliError::io(&self.out, e))?;
        let path = self.out.join("config.toml");
        write_file(&path, self.config.to_toml()?.as_bytes())?;
        Ok(path)
    }

    pub fn pool(&self) -> CliResult<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.jobs)
            .build()
            .map_err(|e| CliError::Failed(format!("cannot start worker pool: {e}")))
    }
}

pub fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    std::fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

pub fn run(cli: &Cli) -> CliResult<()> {
    let spec = ExperimentSpec::from_cli(cli)?;
    log::debug!("effective configuration:\n{}", spec.config.to_toml()?);
    match &spec.command {
        Command::Train => commands::train::cmd_train(&spec),
        Command::NoiseSweep => commands::sweep::cmd_noise_sweep(&spec),
        Command::Linkpred => commands::linkpred::cmd_linkpred(&spec),
        Command::Gradcheck {
            corrupt,
            corrupt_offset,
        } => commands::gradcheck::cmd_gradcheck(&spec, corrupt.as_deref(), *corrupt_offset),
        Command::Params { in_dim, out_dim } => {
            commands::params::cmd_params(&spec, *in_dim, *out_dim)
        }
        Command::Synth => commands::synth::cmd_synth(&spec),
        Command::Plot { csv } => commands::sweep::cmd_plot(&spec, csv),
    }
}
