use std::fs;
use std::path::PathBuf;

use attnbeam::metrics::{corpus_score, ScoringInstance};
use clap::Args;
use serde::{Deserialize, Serialize};

use crate::config::{self, overlay, required};
use crate::error::{CliError, CliResult, ExitCode};

#[derive(Debug, Args)]
pub struct ScoreArgs {
    /// JSON file with any of the options below; flags win.
    #[arg(long)]
    config: Option<PathBuf>,
    /// JSONL with one `{"id", "candidate", "refs"}` object per line [required].
    #[arg(long)]
    input: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScoreOptions {
    pub input: Option<PathBuf>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ScoreLine {
    #[allow(dead_code)]
    id: String,
    candidate: String,
    refs: Vec<String>,
}

pub fn run(args: ScoreArgs) -> CliResult<String> {
    let mut opts: ScoreOptions = config::load(args.config.as_deref())?;
    overlay!(opts, args; opt: input);
    let input = required(&opts.input, "--input")?.clone();
    let text = fs::read_to_string(&input).map_err(|e| CliError::io(&input, e))?;
    let bad = |line: usize, msg: &str| {
        CliError::new(ExitCode::ScoreInput, format!("{}:{line}: {msg}", input.display()))
    };

    let mut instances = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: ScoreLine = serde_json::from_str(line).map_err(|e| bad(idx + 1, &e.to_string()))?;
        if rec.refs.is_empty() {
            return Err(bad(idx + 1, "no references"));
        }
        instances.push(ScoringInstance::from_text(&rec.candidate, &rec.refs));
    }
    if instances.is_empty() {
        return Err(CliError::new(
            ExitCode::ScoreInput,
            format!("{}: no instances to score", input.display()),
        ));
    }
    let report = corpus_score(&instances).map_err(|e| CliError::new(ExitCode::ScoreInput, e.to_string()))?;
    Ok(report.to_presentation_json())
}
