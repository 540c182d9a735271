use std::fs;
use std::path::PathBuf;

use attnbeam::corpus::{build_wordmap, gen_synthetic, write_dataset};
use clap::Args;
use serde::{Deserialize, Serialize};

use crate::config::{self, overlay, required};
use crate::error::{CliError, CliResult};

#[derive(Debug, Args)]
pub struct GenArgs {
    /// JSON file with any of the options below; flags win.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory [required].
    #[arg(long)]
    out: Option<PathBuf>,
    /// Generator seed [default: 0].
    #[arg(long)]
    seed: Option<u64>,
    /// Number of records [default: 8].
    #[arg(long)]
    items: Option<usize>,
    /// Synthetic vocabulary size, at least 5 [default: 20].
    #[arg(long)]
    vocab: Option<usize>,
    /// Pixels per feature grid [default: 4].
    #[arg(long)]
    pixels: Option<usize>,
    /// Feature dimension [default: 8].
    #[arg(long)]
    dim: Option<usize>,
    /// Longest caption in tokens [default: 50].
    #[arg(long)]
    max_len: Option<usize>,
    /// Minimum corpus frequency for a wordmap entry [default: 1].
    #[arg(long)]
    min_count: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GenConfig {
    pub out: Option<PathBuf>,
    pub seed: u64,
    pub items: usize,
    pub vocab: usize,
    pub pixels: usize,
    pub dim: usize,
    pub max_len: usize,
    pub min_count: usize,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            out: None,
            seed: 0,
            items: 8,
            vocab: 20,
            pixels: 4,
            dim: 8,
            max_len: 50,
            min_count: 1,
        }
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    records: usize,
    seed: u64,
    vocab: usize,
    pixels: usize,
    dim: usize,
    max_len: usize,
    min_count: usize,
    wordmap_size: usize,
    dataset: &'a str,
    wordmap: &'a str,
}

pub fn run(args: GenArgs) -> CliResult<String> {
    let mut cfg: GenConfig = config::load(args.config.as_deref())?;
    overlay!(cfg, args; seed, items, vocab, pixels, dim, max_len, min_count);
    overlay!(cfg, args; opt: out);
    let out = required(&cfg.out, "--out")?.clone();
    for (name, value) in [
        ("--items", cfg.items),
        ("--pixels", cfg.pixels),
        ("--dim", cfg.dim),
        ("--max-len", cfg.max_len),
        ("--min-count", cfg.min_count),
    ] {
        if value == 0 {
            return Err(CliError::usage(format!("{name} must be positive")));
        }
    }
    if cfg.vocab < 5 {
        return Err(CliError::usage("--vocab must be at least 5"));
    }

    let records = gen_synthetic(cfg.seed, cfg.items, cfg.vocab, cfg.pixels, cfg.dim, cfg.max_len);
    fs::create_dir_all(&out).map_err(|e| CliError::io(&out, e))?;
    write_dataset(&out, &records).map_err(|e| CliError::usage(e.to_string()))?;

    let corpus: Vec<Vec<String>> = records.iter().flat_map(|r| r.refs.iter().cloned()).collect();
    let wm = build_wordmap(&corpus, cfg.min_count);
    let wm_path = out.join("wordmap.json");
    let mut text = serde_json::to_string(&wm).expect("wordmap serializes");
    text.push('\n');
    fs::write(&wm_path, text).map_err(|e| CliError::io(&wm_path, e))?;

    let manifest = Manifest {
        records: records.len(),
        seed: cfg.seed,
        vocab: cfg.vocab,
        pixels: cfg.pixels,
        dim: cfg.dim,
        max_len: cfg.max_len,
        min_count: cfg.min_count,
        wordmap_size: wm.len(),
        dataset: "dataset.jsonl",
        wordmap: "wordmap.json",
    };
    Ok(serde_json::to_string(&manifest).expect("manifest serializes"))
}
