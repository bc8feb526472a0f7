//! `gckit`: game, comonad and counting queries over small relational
//! structures, answered as JSON envelopes on stdout.

mod commands;
mod input;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

/// Why a command did not produce an envelope. Every variant exits with 2.
#[derive(Debug, thiserror::Error)]
pub enum Failure {
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Core(#[from] gckit::Error),
}

#[derive(Parser)]
#[command(name = "gckit", version, about = "Games, comonads and homomorphism counts on finite structures")]
pub struct Cli {
    /// Exit with status 1 when the answer is negative (not equivalent, separated, distinguished, invalid).
    #[arg(long, global = true)]
    pub strict: bool,
    /// Report wall-clock time in `stats.elapsed_ms`; left null otherwise so output stays reproducible.
    #[arg(long, global = true)]
    pub timing: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum VariantArg {
    Full,
    Exists,
    Pos,
    Ep,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ParameterArg {
    TreeDepth,
    TreeWidth,
}

#[derive(clap::Args)]
pub struct FragmentArgs {
    /// `rank K`, `vars N` or `modal K`.
    #[arg(long, num_args = 2, value_names = ["FAMILY", "BOUND"], required = true)]
    pub family: Vec<String>,
    #[arg(long, value_enum, default_value = "full")]
    pub variant: VariantArg,
    /// Counting quantifiers (or graded modalities); decided by the bijective game.
    #[arg(long)]
    pub counting: bool,
    /// Drop equality from first-order fragments. Modal fragments never have it.
    #[arg(long)]
    pub no_equality: bool,
}

#[derive(Subcommand)]
pub enum Command {
    /// Decide whether A and B agree on a logic fragment.
    Equiv {
        #[command(flatten)]
        fragment: FragmentArgs,
        /// Attach Duplicator's winning strategy.
        #[arg(long)]
        witness: bool,
        /// Attach a distinguishing sentence when the structures differ.
        #[arg(long)]
        certificate: bool,
        a: String,
        b: String,
    },
    /// Tree-depth or tree-width of the Gaifman graph.
    Param {
        #[arg(value_enum)]
        parameter: ParameterArg,
        /// Attach the optimal forest cover.
        #[arg(long)]
        witness: bool,
        a: String,
    },
    /// Build a comonad value and print its carrier as a structure file.
    Comonad {
        #[command(subcommand)]
        flavour: ComonadArg,
    },
    /// Number of homomorphisms from C to A.
    HomCount { c: String, a: String },
    /// Homomorphism counts from every member of a class up to a size.
    HomVector {
        /// `all`, `td K` or `tw N`.
        #[arg(long, num_args = 1..=2, value_names = ["CLASS", "BOUND"], required = true)]
        class: Vec<String>,
        #[arg(long)]
        max_size: usize,
        a: String,
    },
    /// Look for a structure whose homomorphism counts into A and B differ.
    LovaszCompare {
        /// `all`, `td K` or `tw N`.
        #[arg(long, num_args = 1..=2, value_names = ["CLASS", "BOUND"], default_value = "all")]
        class: Vec<String>,
        /// Largest source size; defaults to the larger of the two inputs for `all`.
        #[arg(long)]
        max_size: Option<usize>,
        a: String,
        b: String,
    },
    /// Sentence search that bypasses the games.
    Oracle {
        #[command(subcommand)]
        query: OracleArg,
    },
    /// Cross-module agreement sweeps.
    Selfcheck {
        #[arg(long, default_value_t = 3)]
        size: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Parse a structure file and print it in normal form.
    Fmt { file: String },
    /// Re-check a witness or certificate produced by another command.
    Verify {
        #[command(subcommand)]
        what: VerifyArg,
    },
}

#[derive(Subcommand)]
pub enum ComonadArg {
    /// Plays of length at most K.
    Ef {
        k: usize,
        a: String,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Pebbled plays with N pebbles, length at most K.
    Pebble {
        n: usize,
        k: usize,
        a: String,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Paths of length at most K from the point.
    Modal {
        k: usize,
        a: String,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
pub enum OracleArg {
    /// Search for a sentence true in A and false in B.
    Distinguish {
        #[command(flatten)]
        fragment: FragmentArgs,
        a: String,
        b: String,
    },
}

#[derive(Subcommand)]
pub enum VerifyArg {
    /// Replay a strategy (bare, or inside an `equiv --witness` envelope) against A and B.
    Strategy { witness: PathBuf, a: String, b: String },
    /// Check a forest cover (bare, or inside a `param --witness` envelope) of A.
    Cover { witness: PathBuf, a: String },
    /// Check that a sentence holds in A and fails in B.
    Sentence {
        sentence: String,
        /// Read the sentence as a modal formula evaluated at the points.
        #[arg(long)]
        modal: bool,
        a: String,
        b: String,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let started = Instant::now();
    match commands::run(&cli.command) {
        Ok(mut outcome) => {
            if cli.timing {
                outcome.envelope.stats.elapsed_ms = Some(started.elapsed().as_millis() as u64);
            }
            let text = serde_json::to_string_pretty(&outcome.envelope).expect("envelopes serialize");
            let mut stdout = std::io::stdout().lock();
            if writeln!(stdout, "{text}").is_err() {
                return ExitCode::from(2);
            }
            if outcome.failed || (cli.strict && outcome.negative) {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
