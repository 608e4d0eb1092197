use std::path::{Path, PathBuf};

use crate::config::ConfigError;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("config error at {0}")]
    Config(#[from] ConfigError),
    #[error("experiment `{id}`: {source}")]
    Experiment {
        id: String,
        #[source]
        source: gtwalk_core::Error,
    },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(String),
    #[error("thread pool: {0}")]
    Threads(String),
}

impl RunError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        RunError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn csv(e: csv::Error) -> Self {
        RunError::Csv(e.to_string())
    }
}
