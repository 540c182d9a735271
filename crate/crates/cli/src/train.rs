use std::fmt::Write;
use std::fs;
use std::path::{Path, PathBuf};

use attnbeam::corpus::{build_wordmap, read_dataset, DatasetError, WordMap};
use attnbeam::decoder::{
    checkpoint_save, cross_entropy_totals, train, DecoderError, ModelDims, ModelParams, TrainConfig,
    TrainingExample,
};
use clap::Args;
use serde::{Deserialize, Serialize};

use crate::config::{self, overlay, required};
use crate::error::{CliError, CliResult, ExitCode};

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// JSON file with any of the options below; flags win.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dataset JSONL written by `gen` [required].
    #[arg(long)]
    data: Option<PathBuf>,
    /// Checkpoint output path [required].
    #[arg(long)]
    out: Option<PathBuf>,
    /// Loss trace CSV [default: checkpoint path with extension `loss.csv`].
    #[arg(long)]
    loss_log: Option<PathBuf>,
    /// Wordmap JSON [default: built from the dataset references].
    #[arg(long)]
    wordmap: Option<PathBuf>,
    /// Seed for initialisation and visit order [default: 0].
    #[arg(long)]
    seed: Option<u64>,
    /// Passes over the data [default: 100].
    #[arg(long)]
    epochs: Option<usize>,
    /// Learning rate [default: 0.0004].
    #[arg(long)]
    lr: Option<f64>,
    /// Weight of the attention coverage penalty [default: 1.0].
    #[arg(long)]
    lambda: Option<f64>,
    /// Absolute gradient clip, 0 disables [default: 5.0].
    #[arg(long)]
    grad_clip: Option<f64>,
    /// Word embedding size [default: 16].
    #[arg(long)]
    embed: Option<usize>,
    /// LSTM hidden size [default: 16].
    #[arg(long)]
    hidden: Option<usize>,
    /// Attention layer width [default: 16].
    #[arg(long)]
    attn: Option<usize>,
    /// Minimum frequency when building the wordmap [default: 1].
    #[arg(long)]
    min_count: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainOptions {
    pub data: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub loss_log: Option<PathBuf>,
    pub wordmap: Option<PathBuf>,
    pub seed: u64,
    pub epochs: usize,
    pub lr: f64,
    pub lambda: f64,
    pub grad_clip: f64,
    pub embed: usize,
    pub hidden: usize,
    pub attn: usize,
    pub min_count: usize,
}

impl Default for TrainOptions {
    fn default() -> Self {
        let t = TrainConfig::default();
        Self {
            data: None,
            out: None,
            loss_log: None,
            wordmap: None,
            seed: t.seed,
            epochs: t.epochs,
            lr: t.learning_rate,
            lambda: t.lambda_ds,
            grad_clip: t.grad_clip.unwrap_or(0.0),
            embed: 16,
            hidden: 16,
            attn: 16,
            min_count: 1,
        }
    }
}

#[derive(Serialize)]
struct Summary<'a> {
    seed: u64,
    epochs: usize,
    examples: usize,
    vocab: usize,
    final_mean_loss: f64,
    final_ds_penalty: f64,
    cross_entropy_per_token: f64,
    checkpoint: &'a Path,
    loss_log: &'a Path,
}

fn dataset_error(e: DatasetError) -> CliError {
    let code = match e {
        DatasetError::Features { .. } => ExitCode::Model,
        DatasetError::Io { .. } | DatasetError::Malformed { .. } => ExitCode::Usage,
    };
    CliError::new(code, e.to_string())
}

fn load_wordmap(path: &Path) -> CliResult<WordMap> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
}

pub fn run(args: TrainArgs) -> CliResult<String> {
    let mut opts: TrainOptions = config::load(args.config.as_deref())?;
    overlay!(opts, args; seed, epochs, lr, lambda, grad_clip, embed, hidden, attn, min_count);
    overlay!(opts, args; opt: data, out, loss_log, wordmap);
    let data = required(&opts.data, "--data")?.clone();
    let out = required(&opts.out, "--out")?.clone();
    let loss_log = opts.loss_log.clone().unwrap_or_else(|| out.with_extension("loss.csv"));
    if opts.epochs == 0 || opts.embed == 0 || opts.hidden == 0 || opts.attn == 0 || opts.min_count == 0 {
        return Err(CliError::usage("sizes, epochs and min count must be positive"));
    }
    let non_negative = |v: f64| v.is_finite() && v >= 0.0;
    if ![opts.lr, opts.lambda, opts.grad_clip].into_iter().all(non_negative) {
        return Err(CliError::usage("--lr, --lambda and --grad-clip must be finite and non-negative"));
    }

    let records = read_dataset(&data).map_err(dataset_error)?;
    if records.is_empty() {
        return Err(CliError::usage(format!("{}: dataset has no records", data.display())));
    }
    let feature_dim = records[0].features.dim();
    if let Some(bad) = records.iter().find(|r| r.features.dim() != feature_dim) {
        return Err(CliError::new(
            ExitCode::Model,
            format!("record {} has feature dimension {}, expected {feature_dim}", bad.id, bad.features.dim()),
        ));
    }
    let wm = match &opts.wordmap {
        Some(path) => load_wordmap(path)?,
        None => {
            let corpus: Vec<Vec<String>> = records.iter().flat_map(|r| r.refs.iter().cloned()).collect();
            build_wordmap(&corpus, opts.min_count)
        }
    };

    let examples = TrainingExample::from_records(&records, &wm);
    let dims = ModelDims {
        vocab: wm.len(),
        embed: opts.embed,
        feature_dim,
        hidden: opts.hidden,
        attn: opts.attn,
    };
    let cfg = TrainConfig {
        lambda_ds: opts.lambda,
        learning_rate: opts.lr,
        epochs: opts.epochs,
        seed: opts.seed,
        grad_clip: (opts.grad_clip > 0.0).then_some(opts.grad_clip),
    };
    let outcome = train(&examples, ModelParams::init(dims, opts.seed), &cfg).map_err(|e| match e {
        DecoderError::NonFiniteLoss { epoch } => {
            CliError::new(ExitCode::Divergence, format!("non-finite loss at epoch {epoch}"))
        }
        other => CliError::new(ExitCode::Model, other.to_string()),
    })?;

    fs::write(&out, checkpoint_save(&outcome.params, &cfg, &wm)).map_err(|e| CliError::io(&out, e))?;
    let mut csv = String::from("epoch,mean_loss,ds_penalty\n");
    for s in &outcome.trace {
        writeln!(csv, "{},{},{}", s.epoch, s.mean_loss, s.ds_penalty).unwrap();
    }
    fs::write(&loss_log, csv).map_err(|e| CliError::io(&loss_log, e))?;

    let (nll, tokens) = cross_entropy_totals(&examples, &outcome.params)
        .map_err(|e| CliError::new(ExitCode::Model, e.to_string()))?;
    let last = outcome.trace.last().expect("at least one epoch");
    let summary = Summary {
        seed: opts.seed,
        epochs: opts.epochs,
        examples: examples.len(),
        vocab: wm.len(),
        final_mean_loss: last.mean_loss,
        final_ds_penalty: last.ds_penalty,
        cross_entropy_per_token: nll / tokens as f64,
        checkpoint: &out,
        loss_log: &loss_log,
    };
    Ok(serde_json::to_string(&summary).expect("summary serializes"))
}
