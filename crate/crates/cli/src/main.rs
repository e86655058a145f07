//! `gfb`: command-line front end for graph filterbank experiments.
//!
//! Exit status is 0 on success, 2 for invalid input or configuration and 3
//! when a numerical routine or verification check fails.

mod commands;
mod config;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::CheckFailed;
use config::{Command, Overrides};

#[derive(Parser)]
#[command(name = "gfb", version, about = "Two-channel filterbanks on arbitrary graphs")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Subcommand)]
enum Verb {
    /// Write a synthetic graph as an edge list.
    Generate(Overrides),
    /// Compute the Fourier basis and export it next to the Laplacian spectrum.
    Basis(Overrides),
    /// Analyze and resynthesize random signals, then sweep kept coefficients.
    Roundtrip(Overrides),
    /// Threshold the highpass channels of a noisy coordinate signal.
    Denoise(Overrides),
    /// Per-layer lowpass reconstructions of a step signal.
    Locality(Overrides),
    /// Audit a saved or freshly built pyramid.
    Verify(Overrides),
}

impl Verb {
    fn split(&self) -> (Command, &Overrides) {
        match self {
            Verb::Generate(o) => (Command::Generate, o),
            Verb::Basis(o) => (Command::Basis, o),
            Verb::Roundtrip(o) => (Command::Roundtrip, o),
            Verb::Denoise(o) => (Command::Denoise, o),
            Verb::Locality(o) => (Command::Locality, o),
            Verb::Verify(o) => (Command::Verify, o),
        }
    }
}

const EXIT_INPUT: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<CheckFailed>() {
            return EXIT_NUMERICAL;
        }
        if let Some(e) = cause.downcast_ref::<graph_filterbank::Error>() {
            return if e.is_numerical() { EXIT_NUMERICAL } else { EXIT_INPUT };
        }
    }
    EXIT_INPUT
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, overrides) = cli.verb.split();
    let result = config::resolve(command, overrides).and_then(|cfg| commands::run(&cfg));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
