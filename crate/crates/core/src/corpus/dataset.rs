use std::fs;
use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{load_features, save_features, tokenize, FeatureError, FeatureGrid, RESERVED};

/// One image's features together with its ground-truth captions.
#[derive(Debug, Clone, PartialEq)]
pub struct CaptionRecord {
    pub id: String,
    pub features: FeatureGrid,
    pub refs: Vec<Vec<String>>,
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Malformed {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{path}: {source}")]
    Features {
        path: PathBuf,
        #[source]
        source: FeatureError,
    },
}

/// Wire form of a dataset line.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RecordLine {
    id: String,
    features: String,
    refs: Vec<String>,
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> DatasetError + '_ {
    move |source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Reads a JSONL dataset. Feature paths are resolved relative to the
/// dataset file's directory.
pub fn read_dataset(path: &Path) -> Result<Vec<CaptionRecord>, DatasetError> {
    let file = fs::File::open(path).map_err(io_err(path))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let mut records = Vec::new();
    for (idx, line) in io::BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let malformed = |message: String| DatasetError::Malformed {
            path: path.to_path_buf(),
            line: idx + 1,
            message,
        };
        let rec: RecordLine = serde_json::from_str(&line).map_err(|e| malformed(e.to_string()))?;
        if rec.refs.is_empty() {
            return Err(malformed("record has no references".into()));
        }
        let mut refs = Vec::with_capacity(rec.refs.len());
        for text in &rec.refs {
            let toks = tokenize(text);
            if toks.is_empty() {
                return Err(malformed(format!("reference {text:?} is empty after tokenization")));
            }
            if let Some(bad) = toks.iter().find(|t| RESERVED.contains(&t.as_str())) {
                return Err(malformed(format!("reference contains reserved token {bad}")));
            }
            refs.push(toks);
        }
        let feat_path = base.join(&rec.features);
        let bytes = fs::read(&feat_path).map_err(io_err(&feat_path))?;
        let features = load_features(&bytes).map_err(|source| DatasetError::Features {
            path: feat_path.clone(),
            source,
        })?;
        records.push(CaptionRecord {
            id: rec.id,
            features,
            refs,
        });
    }
    Ok(records)
}

/// Writes `records` as `<dir>/dataset.jsonl` plus one `<dir>/features/<id>.abft`
/// per record. Returns the dataset path.
pub fn write_dataset(dir: &Path, records: &[CaptionRecord]) -> Result<PathBuf, DatasetError> {
    let feat_dir = dir.join("features");
    fs::create_dir_all(&feat_dir).map_err(io_err(&feat_dir))?;
    let mut lines = Vec::new();
    for rec in records {
        let rel = format!("features/{}.abft", rec.id);
        let feat_path = dir.join(&rel);
        fs::write(&feat_path, save_features(&rec.features)).map_err(io_err(&feat_path))?;
        let line = RecordLine {
            id: rec.id.clone(),
            features: rel,
            refs: rec.refs.iter().map(|r| r.join(" ")).collect(),
        };
        serde_json::to_writer(&mut lines, &line).expect("in-memory write");
        lines.push(b'\n');
    }
    let path = dir.join("dataset.jsonl");
    let mut file = fs::File::create(&path).map_err(io_err(&path))?;
    file.write_all(&lines).map_err(io_err(&path))?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::gen_synthetic;

    #[test]
    fn write_then_read() {
        let dir = tempfile::tempdir().unwrap();
        let recs = gen_synthetic(9, 3, 10, 2, 3, 8);
        let path = write_dataset(dir.path(), &recs).unwrap();
        assert_eq!(read_dataset(&path).unwrap(), recs);
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let dir = tempfile::tempdir().unwrap();
        let recs = gen_synthetic(9, 1, 10, 2, 3, 8);
        let path = write_dataset(dir.path(), &recs).unwrap();
        let mut text = fs::read_to_string(&path).unwrap();
        text.push_str("{not json}\n");
        fs::write(&path, text).unwrap();
        match read_dataset(&path) {
            Err(DatasetError::Malformed { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_reserved_tokens_in_refs() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.jsonl");
        fs::write(&path, r#"{"id":"x","features":"f.abft","refs":["a <unk> b"]}"#).unwrap();
        assert!(matches!(read_dataset(&path), Err(DatasetError::Malformed { .. })));
    }

    #[test]
    fn missing_feature_file_names_path() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.jsonl");
        fs::write(&path, r#"{"id":"x","features":"nope.abft","refs":["a b"]}"#).unwrap();
        let err = read_dataset(&path).unwrap_err();
        assert!(err.to_string().contains("nope.abft"));
    }
}
