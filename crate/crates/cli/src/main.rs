//! `attnbeam`: generate synthetic captioning data, train the attention
//! decoder, decode with beam search and score captions.
//!
//! Exit codes: 0 success, 2 usage or I/O, 3 training divergence,
//! 4 checkpoint or feature error, 5 bad score input. Errors print one line
//! to stderr, `error: <kind>: <message>`.

mod config;
mod decode;
mod error;
mod gen;
mod score;
mod train;

use std::process;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use crate::error::ExitCode;

#[derive(Debug, Parser)]
#[command(name = "attnbeam", version, about = "Attention captioning with beam search")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic dataset, its feature files and a wordmap.
    Gen(gen::GenArgs),
    /// Train a decoder on a dataset and write a checkpoint and loss log.
    Train(train::TrainArgs),
    /// Caption feature grids with a trained checkpoint.
    Decode(decode::DecodeArgs),
    /// Score candidate captions against references.
    Score(score::ScoreArgs),
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => e.exit(),
        Err(e) if e.kind() == ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
            eprint!("{}", e.render());
            process::exit(ExitCode::Usage as i32);
        }
        Err(e) => {
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("invalid arguments");
            let msg = first.strip_prefix("error: ").unwrap_or(first);
            eprintln!("{}", error::CliError::usage(msg));
            process::exit(ExitCode::Usage as i32);
        }
    };
    let result = match cli.command {
        Command::Gen(a) => gen::run(a),
        Command::Train(a) => train::run(a),
        Command::Decode(a) => decode::run(a),
        Command::Score(a) => score::run(a),
    };
    match result {
        Ok(out) => {
            if !out.is_empty() {
                println!("{out}");
            }
        }
        Err(e) => {
            eprintln!("{e}");
            process::exit(e.code as i32);
        }
    }
}
