use std::fs;
use std::path::{Path, PathBuf};

use attnbeam::beam::{beam_search, BeamConfig};
use attnbeam::corpus::{decode_ids, detokenize, load_features, FeatureGrid, END_ID, START_ID};
use attnbeam::decoder::{checkpoint_load, DecoderScorer};
use clap::Args;
use serde::{Deserialize, Serialize};

use crate::config::{self, overlay, required};
use crate::error::{CliError, CliResult, ExitCode};

#[derive(Debug, Args)]
pub struct DecodeArgs {
    /// JSON file with any of the options below; flags win.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Checkpoint written by `train` [required].
    #[arg(long)]
    model: Option<PathBuf>,
    /// `.abft` files, directories of them, or dataset JSONL files [required].
    #[arg(long, num_args = 1..)]
    features: Option<Vec<PathBuf>>,
    /// Beam width [default: 4].
    #[arg(long)]
    beam: Option<usize>,
    /// Longest caption in generated tokens, `<end>` included [default: 50].
    #[arg(long)]
    max_len: Option<usize>,
    /// Rank finished captions by mean rather than total log-probability.
    #[arg(long)]
    length_normalize: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DecodeOptions {
    pub model: Option<PathBuf>,
    pub features: Vec<PathBuf>,
    pub beam: usize,
    pub max_len: usize,
    pub length_normalize: bool,
}

impl Default for DecodeOptions {
    fn default() -> Self {
        let b = BeamConfig::default();
        Self {
            model: None,
            features: Vec::new(),
            beam: b.k,
            max_len: b.max_len,
            length_normalize: b.length_normalize,
        }
    }
}

#[derive(Serialize)]
struct Line<'a> {
    id: &'a str,
    caption: String,
    log_prob: f64,
    beam: usize,
}

/// The fields of a dataset line that decoding needs.
#[derive(Deserialize)]
struct InputLine {
    id: String,
    features: String,
}

fn model_err(path: &Path, err: impl std::fmt::Display) -> CliError {
    CliError::new(ExitCode::Model, format!("{}: {err}", path.display()))
}

fn read_grid(path: &Path) -> CliResult<FeatureGrid> {
    let bytes = fs::read(path).map_err(|e| model_err(path, e))?;
    load_features(&bytes).map_err(|e| model_err(path, e))
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

/// Expands the `--features` arguments into `(id, path)` pairs in a fixed order.
fn collect_inputs(paths: &[PathBuf]) -> CliResult<Vec<(String, PathBuf)>> {
    let mut inputs = Vec::new();
    for path in paths {
        if path.is_dir() {
            let mut files: Vec<PathBuf> = fs::read_dir(path)
                .map_err(|e| model_err(path, e))?
                .filter_map(|entry| entry.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "abft"))
                .collect();
            files.sort();
            inputs.extend(files.into_iter().map(|p| (stem(&p), p)));
        } else if path.extension().is_some_and(|x| x == "jsonl") {
            let text = fs::read_to_string(path).map_err(|e| model_err(path, e))?;
            let base = path.parent().unwrap_or_else(|| Path::new("."));
            for (idx, line) in text.lines().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                let rec: InputLine = serde_json::from_str(line)
                    .map_err(|e| model_err(path, format!("line {}: {e}", idx + 1)))?;
                inputs.push((rec.id, base.join(rec.features)));
            }
        } else {
            inputs.push((stem(path), path.clone()));
        }
    }
    Ok(inputs)
}

pub fn run(args: DecodeArgs) -> CliResult<String> {
    let mut opts: DecodeOptions = config::load(args.config.as_deref())?;
    overlay!(opts, args; features, beam, max_len);
    opts.length_normalize |= args.length_normalize;
    overlay!(opts, args; opt: model);
    let model = required(&opts.model, "--model")?.clone();
    if opts.features.is_empty() {
        return Err(CliError::usage("missing --features (flag or config file)"));
    }
    if opts.beam == 0 || opts.max_len == 0 {
        return Err(CliError::usage("--beam and --max-len must be positive"));
    }

    let bytes = fs::read(&model).map_err(|e| model_err(&model, e))?;
    let ckpt = checkpoint_load(&bytes).map_err(|e| model_err(&model, e))?;
    let scorer = DecoderScorer::new(&ckpt.params);
    let cfg = BeamConfig {
        k: opts.beam,
        max_len: opts.max_len,
        start_id: START_ID,
        end_id: Some(END_ID),
        length_normalize: opts.length_normalize,
    };

    let mut out = Vec::new();
    for (id, path) in collect_inputs(&opts.features)? {
        let grid = read_grid(&path)?;
        scorer.validate(&grid).map_err(|e| model_err(&path, e))?;
        let res = beam_search(&scorer, &grid, &cfg).map_err(|e| CliError::usage(e.to_string()))?;
        let line = Line {
            id: &id,
            caption: detokenize(&decode_ids(&res.best.tokens, &ckpt.wordmap)),
            log_prob: res.best.score,
            beam: opts.beam,
        };
        out.push(serde_json::to_string(&line).expect("line serializes"));
    }
    Ok(out.join("\n"))
}
