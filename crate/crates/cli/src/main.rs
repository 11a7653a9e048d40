use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fbmlab::persistence::{Event, Preset, PsiModel};
use fbmlab::verify::Suite;
use fbmlab::Family;

mod commands;
mod config;
mod output;

/// Errors by exit code: 1 assertion, 2 configuration, 3 budget.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("assertion failed: {0}")]
    Assertion(String),
    #[error("budget error: {0}")]
    Budget(String),
    #[error("{0}")]
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Assertion(_) => 1,
            CliError::Config(_) | CliError::Other(_) => 2,
            CliError::Budget(_) => 3,
        }
    }
}

impl From<fbmlab::Error> for CliError {
    fn from(e: fbmlab::Error) -> Self {
        use fbmlab::Error as E;
        match e {
            E::Budget { .. } | E::InsufficientSurvivors { .. } => CliError::Budget(e.to_string()),
            E::NotPositiveSemidefinite { .. } | E::Hypothesis(_) => CliError::Assertion(e.to_string()),
            E::Io(_) => CliError::Other(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "fbmlab",
    version,
    about = "Persistence experiments for fBm, fBs, integrated fBm and their stationary duals"
)]
struct Cli {
    /// Worker threads (estimates do not depend on it).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory; defaults to the config's, then $FBMLAB_OUT, then ./fbmlab-out.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Log progress (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a verification suite.
    Verify(VerifyArgs),
    /// Estimate persistence probabilities along a ladder and fit the exponent.
    Persist(PersistArgs),
    /// Draw and export a path ensemble.
    Sample(SampleArgs),
    /// Refit exponents from a ladder.csv.
    Fit(FitArgs),
    /// Summarize a finished run directory.
    Report(ReportArgs),
}

fn parse_serde<T: serde::de::DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|e| e.to_string())
}

fn parse_family(s: &str) -> Result<Family, String> {
    parse_serde(&s.to_ascii_uppercase())
}

fn parse_event(s: &str) -> Result<Event, String> {
    parse_serde(&s.to_ascii_uppercase())
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// kernels, lemma2, prop1, duality or samplers.
    #[arg(value_parser = |s: &str| s.parse::<Suite>().map_err(|e| e.to_string()))]
    pub target: Option<Suite>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub n_trials: Option<usize>,
    #[arg(long)]
    pub n_qmc: Option<usize>,
}

#[derive(Args, Debug)]
pub struct PersistArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_parser = |s: &str| s.parse::<Preset>().map_err(|e| e.to_string()))]
    pub preset: Option<Preset>,
    /// Hurst indices, comma separated.
    #[arg(long = "H", value_delimiter = ',')]
    pub hurst: Option<Vec<f64>>,
    #[arg(long)]
    pub n_trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Horizons T, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub ladder: Option<Vec<f64>>,
    #[arg(long)]
    pub n_grid: Option<usize>,
    /// Kernel family for an ad-hoc ladder.
    #[arg(long, value_parser = parse_family)]
    pub kernel: Option<Family>,
    /// Scale of the sech kernel.
    #[arg(long)]
    pub scale: Option<f64>,
    /// Barrier level; ladders built from flags default to 1.
    #[arg(long, allow_negative_numbers = true)]
    pub level: Option<f64>,
    #[arg(long, value_parser = |s: &str| s.parse::<PsiModel>().map_err(|e| e.to_string()))]
    pub psi: Option<PsiModel>,
    #[arg(long, value_parser = parse_event)]
    pub event: Option<Event>,
}

#[derive(Args, Debug)]
pub struct SampleArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_parser = parse_family)]
    pub kernel: Option<Family>,
    #[arg(long = "H")]
    pub hurst: Option<f64>,
    #[arg(long)]
    pub scale: Option<f64>,
    /// Domain scale T.
    #[arg(long = "T")]
    pub t: Option<f64>,
    #[arg(long)]
    pub n_grid: Option<usize>,
    #[arg(long)]
    pub n_trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Compare the empirical covariance with the kernel.
    #[arg(long)]
    pub check_cov: bool,
    /// Export CSV instead of binary.
    #[arg(long)]
    pub csv: bool,
}

#[derive(Args, Debug)]
pub struct FitArgs {
    /// A ladder.csv written by `persist`.
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override the psi model recorded in the file.
    #[arg(long, value_parser = |s: &str| s.parse::<PsiModel>().map_err(|e| e.to_string()))]
    pub psi: Option<PsiModel>,
}

#[derive(Args, Debug)]
pub struct ReportArgs {
    /// Run directory; defaults to the output directory.
    pub dir: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("configuration error: --threads must be >= 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let ctx = commands::Context { out: cli.out.clone(), threads: rayon::current_num_threads() };
    let result = match &cli.command {
        Command::Verify(a) => commands::verify(&ctx, a),
        Command::Persist(a) => commands::persist(&ctx, a),
        Command::Sample(a) => commands::sample(&ctx, a),
        Command::Fit(a) => commands::fit(&ctx, a),
        Command::Report(a) => commands::report(&ctx, a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
