//! Corpus file IO. The format is a single JSON document with a top-level
//! "scenarios" array; every list field is a required key (absence is a format
//! error, emptiness is valid data).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tutorbench_core::scenario::{Corpus, CorpusError, TutoringScenario};

#[derive(Debug, thiserror::Error)]
pub enum CorpusIoError {
    #[error("cannot read corpus {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed corpus {path}: {detail}")]
    Malformed { path: PathBuf, detail: String },
    #[error("invalid corpus {path}: {source}")]
    Invalid { path: PathBuf, source: CorpusError },
}

#[derive(Debug, Serialize, Deserialize)]
struct CorpusFile {
    scenarios: Vec<serde_json::Value>,
}

/// Loads a corpus, preserving file order. Malformed records are reported with
/// their scenario index and the offending field.
pub fn load_corpus(path: &Path) -> Result<Corpus, CorpusIoError> {
    let text = std::fs::read_to_string(path).map_err(|source| CorpusIoError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let file: CorpusFile =
        serde_json::from_str(&text).map_err(|e| CorpusIoError::Malformed {
            path: path.to_path_buf(),
            detail: e.to_string(),
        })?;
    let mut scenarios = Vec::with_capacity(file.scenarios.len());
    for (index, value) in file.scenarios.into_iter().enumerate() {
        let scenario: TutoringScenario =
            serde_json::from_value(value).map_err(|e| CorpusIoError::Malformed {
                path: path.to_path_buf(),
                detail: format!("scenario {index}: {e}"),
            })?;
        scenarios.push(scenario);
    }
    Corpus::new(scenarios, path.display().to_string()).map_err(|source| CorpusIoError::Invalid {
        path: path.to_path_buf(),
        source,
    })
}

/// Serializes a corpus back to the file format (used by round-trip tests and
/// fixture generation).
pub fn corpus_to_json(corpus: &Corpus) -> String {
    #[derive(Serialize)]
    struct Out<'a> {
        scenarios: &'a [TutoringScenario],
    }
    serde_json::to_string_pretty(&Out {
        scenarios: &corpus.scenarios,
    })
    .expect("corpus serialization cannot fail")
}
