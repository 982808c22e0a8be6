//! `pldpch`: construct, encode, decode, analyze, optimize and simulate
//! spatially coupled protograph LDPC-Hadamard codes.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use pldpch_core::{fixtures, CodeDesign};

#[derive(Parser, Debug)]
#[command(name = "pldpch", version, about)]
struct Cli {
    /// Worker threads for parallel stages (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Manifest path (default: next to the main output, or
    /// `pldpch-<command>.manifest.json` when there is none).
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Lift the base matrix of a design into a quasi-cyclic code.
    Lift(commands::LiftArgs),
    /// Encode information frames into a packed P/D bit stream.
    Encode(commands::EncodeArgs),
    /// Pipeline-decode a bit or LLR stream.
    Decode(commands::DecodeArgs),
    /// Layered PEXIT convergence ladder and threshold.
    Pexit(commands::PexitArgs),
    /// Genetic search over splits of a base matrix.
    Ga(commands::GaArgs),
    /// Monte-Carlo BER over an E_b/N_0 grid.
    Ber(commands::BerArgs),
    /// Re-run the command recorded in a manifest.
    #[serde(skip)]
    Rerun {
        manifest: PathBuf,
    },
}

/// Either a design file or the name of a shipped fixture.
#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct DesignArg {
    /// Design file (`rows cols W order` header, then the W+1 parts).
    #[arg(long, conflicts_with = "fixture", required_unless_present = "fixture")]
    pub design: Option<PathBuf>,

    /// Shipped design: worked_w1, worked_w2, r4_tdc1, r4_tdc2,
    /// r4_optimized, r5_optimized, r8_optimized, r10_optimized.
    #[arg(long)]
    pub fixture: Option<String>,
}

impl DesignArg {
    pub fn load(&self) -> Result<CodeDesign, Failure> {
        match (&self.design, &self.fixture) {
            (Some(p), _) => Ok(CodeDesign::load(p)?),
            (None, Some(name)) => fixtures::by_name(name).ok_or_else(|| Failure::validation(format!("unknown fixture {name}"))),
            (None, None) => Err(Failure::validation("need --design or --fixture")),
        }
    }
}

/// Error with its exit status: 1 for invalid input, 2 for runtime failures.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn validation(m: impl Into<String>) -> Self {
        Failure { code: 1, message: m.into() }
    }

    pub fn runtime(m: impl Into<String>) -> Self {
        Failure { code: 2, message: m.into() }
    }
}

impl From<pldpch_core::Error> for Failure {
    fn from(e: pldpch_core::Error) -> Self {
        match e {
            pldpch_core::Error::Io(_) => Failure::runtime(e.to_string()),
            _ => Failure::validation(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::runtime(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    if let Some(n) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match cli.command {
        Command::Rerun { manifest } => manifest::load(&manifest).and_then(|cmd| run(cmd, Some(manifest), cli.jobs)),
        cmd => run(cmd, cli.manifest, cli.jobs),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cmd: Command, manifest_path: Option<PathBuf>, jobs: Option<usize>) -> Result<(), Failure> {
    let path = manifest_path.unwrap_or_else(|| manifest::default_path(&cmd));
    match &cmd {
        Command::Lift(a) => commands::lift(a)?,
        Command::Encode(a) => commands::encode(a)?,
        Command::Decode(a) => commands::decode(a)?,
        Command::Pexit(a) => commands::pexit(a)?,
        Command::Ga(a) => commands::ga(a)?,
        Command::Ber(a) => commands::ber(a)?,
        Command::Rerun { .. } => return Err(Failure::validation("a manifest cannot point at another manifest")),
    }
    manifest::write(&path, &cmd, jobs)
}
