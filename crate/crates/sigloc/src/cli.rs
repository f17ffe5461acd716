//! Argument parsing and dispatch.

use std::fs;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use crate::commands::{self, Outcome};
use crate::config::{self, Format, RunConfig};
use crate::error::{CliError, CliResult};
use crate::selftest;

#[derive(Parser, Debug)]
#[command(name = "sigloc", version, about = "Topological invariants from spectral localizer signatures")]
pub struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Write the result table here (overrides `output.path`).
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<FormatArg>,
    /// Worker threads for sweeps and disorder samples.
    #[arg(long, global = true, value_name = "N")]
    pub workers: Option<usize>,
    #[arg(long, global = true, value_name = "U64")]
    pub seed: Option<u64>,
    /// Accept localizers whose gap exceeds g/4 and search kappa for it.
    #[arg(long, global = true)]
    pub practical: bool,
    /// Progress on stderr.
    #[arg(long, short, global = true)]
    pub verbose: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Csv,
    Json,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Assemble the model on the ball and report bulk parameters.
    Model,
    /// Build and certify the localizer.
    Localize,
    /// Inertia of a stored Hermitian matrix by both methods.
    Sig {
        /// Matrix file (text, `.bin` or `.json`); defaults to `input.matrix`.
        matrix: Option<PathBuf>,
    },
    /// Localizer pairing against the momentum-space oracle.
    Index,
    /// Signature over a (kappa, rho) grid.
    Sweep,
    /// Trace-per-volume weak invariant.
    Weak,
    /// Momentum-space invariant only.
    Oracle,
    /// Quick property checks.
    Selftest,
}

fn load(cli: &Cli) -> CliResult<Option<RunConfig>> {
    let Some(path) = &cli.config else {
        return Ok(None);
    };
    let text = fs::read_to_string(path).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    let mut config = config::parse_config(&text)?;
    if let Some(w) = cli.workers {
        config.workers = w;
    }
    if let Some(s) = cli.seed {
        config.seed = s;
    }
    config.practical |= cli.practical;
    if let Some(f) = cli.format {
        config.format = match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        };
    }
    if cli.out.is_some() {
        config.out = cli.out.clone();
    }
    Ok(Some(config))
}

fn emit(outcome: Outcome, out: Option<&PathBuf>, format: Format) -> CliResult<()> {
    print!("{}", outcome.table.human());
    if let Some(path) = out {
        outcome.table.write(path, format)?;
    }
    match outcome.failure {
        Some(msg) => Err(CliError::Compute(msg)),
        None => Ok(()),
    }
}

pub fn run(cli: Cli) -> CliResult<()> {
    if cli.workers == Some(0) {
        return Err(CliError::config("--workers must be at least 1"));
    }
    let config = load(&cli)?;
    if cli.verbose {
        if let Some(c) = &config {
            eprintln!("config: {}", serde_json::to_string(c)?);
        }
    }
    let format = config.as_ref().map(|c| c.format).unwrap_or(match cli.format {
        Some(FormatArg::Json) => Format::Json,
        _ => Format::Csv,
    });
    let out = config.as_ref().and_then(|c| c.out.clone()).or_else(|| cli.out.clone());
    let need = |name: &str| config.as_ref().ok_or_else(|| CliError::config(format!("`{name}` needs --config")));
    let outcome = match &cli.command {
        Command::Model => commands::model(need("model")?, cli.verbose)?,
        Command::Localize => commands::localize(need("localize")?, cli.verbose)?,
        Command::Sig { matrix } => {
            let path = matrix
                .clone()
                .or_else(|| config.as_ref().and_then(|c| c.matrix_in.clone()))
                .ok_or_else(|| CliError::config("`sig` needs a matrix path or input.matrix"))?;
            commands::sig(&path, config.as_ref().and_then(|c| c.zero_tol), cli.verbose)?
        }
        Command::Index => commands::index(need("index")?, cli.verbose)?,
        Command::Sweep => commands::sweep(need("sweep")?, cli.verbose)?,
        Command::Weak => commands::weak(need("weak")?, cli.verbose)?,
        Command::Oracle => commands::oracle(need("oracle")?)?,
        Command::Selftest => {
            let seed = cli.seed.or(config.as_ref().map(|c| c.seed)).unwrap_or(0);
            selftest::run(seed, cli.verbose)
        }
    };
    emit(outcome, out.as_ref(), format)
}
