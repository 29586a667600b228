//! Batch command-line front end over the landscape analyses: validation,
//! relaxation reports, capacity probes, lattice droplet experiments, and
//! polyomino geometry. Every payload is reproducible from its manifest.

mod analyze;
mod args;
mod bc;
mod capacity;
mod emit;
mod manifest;
mod poly;
mod validate;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use relax_core::blume_capel::BcError;
use relax_core::capacity::CapacityError;
use relax_core::landscape::ParseError;
use relax_core::polyomino::PolyominoError;
use relax_core::LandscapeError;

#[derive(Parser)]
#[command(
    name = "relax",
    version,
    about = "Relaxation heights, capacities, and droplet nucleation on finite energy landscapes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a landscape file: connectivity, costs, reversibility.
    Validate(validate::ValidateArgs),
    /// Relaxation height, stability levels, and optional gate enumeration.
    Analyze(analyze::AnalyzeArgs),
    /// Capacity computations on a landscape file.
    #[command(subcommand)]
    Capacity(capacity::CapacityCmd),
    /// Droplet model experiments on the torus.
    #[command(subcommand)]
    Bc(bc::BcCmd),
    /// Minimal-perimeter geometry for a given area.
    Poly(poly::PolyArgs),
}

/// Failure classes of the exit-code contract: 1 analysis, 2 input,
/// 3 resource bound.
#[derive(Debug)]
pub enum Failure {
    Analysis(String),
    Input(String),
    Resource(String),
}

pub type CmdResult = Result<(), Failure>;

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Analysis(_) => 1,
            Failure::Input(_) => 2,
            Failure::Resource(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Analysis(m) | Failure::Input(m) | Failure::Resource(m) => m,
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Input(e.to_string())
    }
}

impl From<ParseError> for Failure {
    fn from(e: ParseError) -> Self {
        Failure::Input(e.to_string())
    }
}

impl From<LandscapeError> for Failure {
    fn from(e: LandscapeError) -> Self {
        match e {
            LandscapeError::TooManySaddles(..) => Failure::Resource(e.to_string()),
            LandscapeError::Invalid(_) => Failure::Analysis(e.to_string()),
            _ => Failure::Input(e.to_string()),
        }
    }
}

impl From<CapacityError> for Failure {
    fn from(e: CapacityError) -> Self {
        match e {
            CapacityError::Landscape(inner) => inner.into(),
            CapacityError::Singular(_) => Failure::Analysis(e.to_string()),
            _ => Failure::Input(e.to_string()),
        }
    }
}

impl From<BcError> for Failure {
    fn from(e: BcError) -> Self {
        match e {
            BcError::BudgetExceeded { .. } => Failure::Resource(e.to_string()),
            _ => Failure::Input(e.to_string()),
        }
    }
}

impl From<PolyominoError> for Failure {
    fn from(e: PolyominoError) -> Self {
        match e {
            PolyominoError::EnumerationBound(..) => Failure::Resource(e.to_string()),
            _ => Failure::Input(e.to_string()),
        }
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Analysis(format!("serialization failed: {e}"))
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Analysis(format!("table emission failed: {e}"))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Validate(a) => validate::run(a),
        Command::Analyze(a) => analyze::run(a),
        Command::Capacity(c) => capacity::run(c),
        Command::Bc(c) => bc::run(c),
        Command::Poly(a) => poly::run(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.exit_code())
        }
    }
}
