//! `logkdv`: reproducible numerical experiments on the linearized
//! log-KdV problem. Each subcommand writes CSV traces and a JSON summary
//! to the output directory.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use serde::Serialize;

use config::{
    CoercivityArgs, DissipateArgs, EvolveArgs, FileConfig, ProjectionsArgs, ReconstructArgs,
    SpectrumArgs,
};
use output::OutDir;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numerical(String),
    Io(String),
}

impl CliError {
    fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Numerical(_) => "numerical",
            CliError::Io(_) => "io",
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Numerical(m) | CliError::Io(m) => m,
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 1,
            CliError::Numerical(_) => 2,
        }
    }
}

impl<E: Into<logkdv_core::Error>> From<E> for CliError {
    fn from(e: E) -> Self {
        let e: logkdv_core::Error = e.into();
        if e.is_configuration() {
            CliError::Config(e.to_string())
        } else {
            CliError::Numerical(e.to_string())
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "logkdv", version, about = "Numerical experiments for the linearized log-KdV equation")]
struct Cli {
    /// TOML file with a table per subcommand and an optional top-level `seed`.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Directory for CSV and JSON outputs.
    #[arg(long, global = true, env = "LOGKDV_OUT_DIR", default_value = "out")]
    out_dir: PathBuf,

    /// Seed for randomized presets and samples.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Locate eigenvalues from the Wronskian limit and fit decay rates.
    Spectrum(SpectrumArgs),
    /// Evolve the skew-symmetric lattice and track `c_1`.
    Evolve(EvolveArgs),
    /// Run the dissipative half-line flow with the modulation equations.
    Dissipate(DissipateArgs),
    /// Estimate the coercivity constant and check it on random samples.
    Coercivity(CoercivityArgs),
    /// Tabulate the projection sequence `f_n`.
    Projections(ProjectionsArgs),
    /// Assemble eigenvector profiles in physical space.
    Reconstruct(ReconstructArgs),
}

#[derive(Serialize)]
struct ErrorLine<'a> {
    error: &'a str,
    message: &'a str,
}

fn run(cli: Cli) -> Result<PathBuf, CliError> {
    let file = match &cli.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let seed = cli.seed.or(file.seed).unwrap_or(0);
    macro_rules! dispatch {
        ($args:expr, $section:ident, $f:path) => {{
            let cfg = $args.resolve(&file.$section);
            cfg.validate()?;
            $f(&cfg, seed, OutDir::create(&cli.out_dir)?)
        }};
    }
    match &cli.command {
        Command::Spectrum(a) => dispatch!(a, spectrum, commands::spectrum),
        Command::Evolve(a) => dispatch!(a, evolve, commands::evolve_lattice),
        Command::Dissipate(a) => dispatch!(a, dissipate, commands::dissipate),
        Command::Coercivity(a) => dispatch!(a, coercivity, commands::coercivity),
        Command::Projections(a) => dispatch!(a, projections, commands::projections),
        Command::Reconstruct(a) => dispatch!(a, reconstruct, commands::reconstruct),
    }
}

fn fail(e: &CliError) -> ExitCode {
    let line = ErrorLine { error: e.kind(), message: e.message() };
    eprintln!("{}", serde_json::to_string(&line).expect("error line serializes"));
    ExitCode::from(e.exit_code())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.render().to_string();
            let first = text.lines().next().unwrap_or("invalid arguments");
            let msg = first.strip_prefix("error: ").unwrap_or(first);
            return fail(&CliError::Config(msg.to_string()));
        }
    };
    match run(cli) {
        Ok(summary) => {
            println!("{}", summary.display());
            ExitCode::SUCCESS
        }
        Err(e) => fail(&e),
    }
}
