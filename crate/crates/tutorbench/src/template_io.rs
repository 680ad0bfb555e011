//! Template asset loading; parsing and validation live in the core crate.

use std::path::{Path, PathBuf};

use tutorbench_core::prompt::{PromptTemplate, TemplateError};

#[derive(Debug, thiserror::Error)]
pub enum TemplateIoError {
    #[error("cannot read template {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid template {path}: {source}")]
    Invalid {
        path: PathBuf,
        source: TemplateError,
    },
}

pub fn load_template(path: &Path) -> Result<PromptTemplate, TemplateIoError> {
    let text = std::fs::read_to_string(path).map_err(|source| TemplateIoError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    PromptTemplate::parse(&text).map_err(|source| TemplateIoError::Invalid {
        path: path.to_path_buf(),
        source,
    })
}
