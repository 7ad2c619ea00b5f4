//! `eventvol`: batch runs of abnormal-volatility event studies.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use eventvol::market_data::WindowSpec;
use eventvol::{ErrorClass, OutcomeGroup};

mod commands;
mod config;
mod output;

use config::RunConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] eventvol::Error),
    #[error("{path}: {source}")]
    Output {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{failed} of {total} group/window studies failed")]
    PartialFailure { failed: usize, total: usize },
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Core(e) => match e.class() {
                ErrorClass::Data => 3,
                ErrorClass::Numerical => 4,
            },
            CliError::Output { .. } => 3,
            CliError::PartialFailure { .. } => 4,
        }
    }
}

#[derive(Parser)]
#[command(name = "eventvol", version, about = "Abnormal stock-return volatility around dated events")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Default)]
struct Overrides {
    /// TOML run configuration
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (does not change results)
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Window such as "-1w,+1w" or "(-1 month,2 months)"; repeatable
    #[arg(long, global = true, allow_hyphen_values = true)]
    window: Vec<WindowSpec>,
    /// Outcome group: investor, state or settled; repeatable
    #[arg(long, global = true)]
    group: Vec<OutcomeGroup>,
    /// Output directory
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Price file (date,ticker,adj_close)
    #[arg(long, global = true)]
    prices: Option<PathBuf>,
    /// Case file
    #[arg(long, global = true)]
    cases: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Cumulative abnormal volatility per outcome group and window
    Study {
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Regress case-level abnormal volatility on dispute characteristics
    Regress {
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Write a synthetic price and case file
    Simulate {
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Fit the GARCH market model for one case
    Fit {
        /// Case identifier from the case file
        #[arg(long)]
        case: String,
        #[command(flatten)]
        overrides: Overrides,
    },
}

fn resolve(overrides: &Overrides) -> Result<RunConfig, CliError> {
    let mut config = match &overrides.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = overrides.seed {
        config.seed = seed;
        config.simulate.seed = seed;
    }
    if !overrides.window.is_empty() {
        config.windows = overrides.window.clone();
        config.regress.window = overrides.window[0];
        config.simulate.window = overrides.window[0];
    }
    if !overrides.group.is_empty() {
        config.groups = overrides.group.clone();
    }
    if let Some(out) = &overrides.out {
        config.out = out.clone();
    }
    if let Some(p) = &overrides.prices {
        config.price_file = Some(p.clone());
    }
    if let Some(p) = &overrides.cases {
        config.case_file = Some(p.clone());
    }
    config.validate()?;
    if let Some(n) = overrides.workers {
        if n == 0 {
            return Err(CliError::Config("--workers must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    Ok(config)
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Study { overrides } => commands::study(&resolve(&overrides)?),
        Command::Regress { overrides } => commands::regress(&resolve(&overrides)?),
        Command::Simulate { overrides } => commands::simulate(&resolve(&overrides)?),
        Command::Fit { case, overrides } => commands::fit(&resolve(&overrides)?, &case),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e}");
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
