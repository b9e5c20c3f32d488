//! Front end for convergence, compression, operation-count and single
//! solve runs. Every command returns its CSV as a string.

pub mod commands;
pub mod config;
pub mod geometry;

pub use commands::{compress, converge, ops_count, solve, Command};
pub use config::{GeometrySource, RunConfig, Settings};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse {
        path: String,
        #[source]
        source: toml::de::Error,
    },
    #[error("{0}")]
    Geometry(String),
    #[error(transparent)]
    Bem(#[from] bem::BemError),
    #[error(transparent)]
    Nurbs(#[from] nurbs::NurbsError),
}

pub type Result<T> = std::result::Result<T, CliError>;
