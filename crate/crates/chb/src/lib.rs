//! Experiments, convergence study, file formats and command line for the
//! Cahn-Hilliard-Biot simulator in `chb-core`.

use std::path::{Path, PathBuf};

pub mod chl;
pub mod config;
pub mod convergence;
pub mod experiments;
pub mod output;
pub mod runner;

/// Environment variable naming the directory below which outputs are written.
pub const OUTPUT_ROOT_VAR: &str = "CHB_OUTPUT_ROOT";

pub fn output_root() -> PathBuf {
    std::env::var_os(OUTPUT_ROOT_VAR).map_or_else(|| PathBuf::from("output"), PathBuf::from)
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("configuration: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Core(#[from] chb_core::Error),
    #[error("run failed: {0}")]
    Run(String),
}

impl Error {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn csv(path: &Path, e: csv::Error) -> Self {
        match e.into_kind() {
            csv::ErrorKind::Io(source) => Self::io(path, source),
            other => Error::Config(format!("{}: {other:?}", path.display())),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
