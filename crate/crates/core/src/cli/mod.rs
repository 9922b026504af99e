//! Command-line driver: `hopf`, `orbit`, `spectrum` and `verify`.
//!
//! Exit codes: 0 ok, 1 configuration or input error, 2 no Hopf crossing,
//! 3 Newton failure, 4 failed verification.

mod commands;
pub mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::error::Error;
pub use config::{ConfigError, RunConfig};

#[derive(Debug, Parser)]
#[command(name = "floquet-kdvbf", version, about = "Periodic KdV-Burgers-Fisher waves and their Floquet spectra")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Locate the Hopf point and print it as JSON.
    Hopf(CommonArgs),
    /// Continue the wave family over the eps grid and write profiles.
    Orbit(CommonArgs),
    /// Floquet spectra of previously computed profiles.
    Spectrum {
        #[command(flatten)]
        common: CommonArgs,
        /// Use the constant-coefficient operator at eps = 0 instead of profiles.
        #[arg(long)]
        constant_coeff: bool,
    },
    /// Run the acceptance checks and print a pass/fail table.
    Verify(CommonArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// `key = value` configuration file; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, allow_negative_numbers = true)]
    pub r: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: Option<f64>,
    /// Comma-separated, ascending.
    #[arg(long, allow_hyphen_values = true)]
    pub eps: Option<String>,
    #[arg(long)]
    pub n_theta: Option<usize>,
    #[arg(long)]
    pub fourier_m: Option<usize>,
    #[arg(long)]
    pub bloch_n: Option<usize>,
    /// Newton tolerance on the profile residual.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl CommonArgs {
    pub fn resolve(&self) -> anyhow::Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(v) = self.r {
            cfg.r = v;
        }
        if let Some(v) = self.alpha {
            cfg.alpha = v;
        }
        if let Some(v) = &self.eps {
            cfg.eps_grid = config::parse_eps_list(v)?;
        }
        if let Some(v) = self.n_theta {
            cfg.n_theta = v;
        }
        if let Some(v) = self.fourier_m {
            cfg.fourier_m = v;
        }
        if let Some(v) = self.bloch_n {
            cfg.bloch_n = v;
        }
        if let Some(v) = self.tol {
            cfg.tol = v;
        }
        if let Some(v) = &self.out {
            cfg.out_dir = v.clone();
        }
        Ok(cfg)
    }
}

/// Raised when at least one acceptance check fails.
#[derive(Debug, thiserror::Error)]
#[error("{failed} of {total} checks failed")]
pub struct VerifyFailed {
    pub failed: usize,
    pub total: usize,
}

pub fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<ConfigError>() {
            return 1;
        }
        if cause.is::<VerifyFailed>() {
            return 4;
        }
        if let Some(e) = cause.downcast_ref::<Error>() {
            return match e.innermost() {
                Error::NoCrossing { .. } | Error::PairLost { .. } => 2,
                Error::NoConvergence { .. } | Error::CollapsedToZero { .. } | Error::EigFailure { .. } => 3,
                _ => 1,
            };
        }
    }
    1
}

fn init_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var("FLOQUET_KDVBF_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| ConfigError(format!("FLOQUET_KDVBF_THREADS must be a positive integer, got {v:?}")))?;
        if n == 0 {
            return Err(ConfigError("FLOQUET_KDVBF_THREADS must be a positive integer, got 0".into()).into());
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    init_threads()?;
    match cli.command {
        Command::Hopf(args) => commands::hopf(&args.resolve()?),
        Command::Orbit(args) => commands::orbit(&args.resolve()?),
        Command::Spectrum { common, constant_coeff } => commands::spectrum(&common.resolve()?, constant_coeff),
        Command::Verify(args) => commands::verify(&args.resolve()?),
    }
}

/// Entry point for the binary.
pub fn main() -> ExitCode {
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
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
