//! Performance analysis of uplink integrated sensing and communications with
//! zero-forcing NOMA reception and sequential radar-interference cancellation.
//!
//! Closed forms live in [`comm`] and [`sensing`], the simulation oracle in
//! [`montecarlo`], rate regions in [`region`], and [`figures`] / [`validate`]
//! assemble them into tables and agreement reports.

use std::path::PathBuf;

use thiserror::Error;

pub mod comm;
pub mod config;
pub mod figures;
pub mod linalg;
pub mod montecarlo;
pub mod quad;
pub mod region;
pub mod rng;
pub mod run_config;
pub mod sensing;
pub mod specfun;
pub mod table;
pub mod validate;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {source}", path.display())]
    ConfigFile {
        path: PathBuf,
        source: config::ConfigError,
    },
    #[error(transparent)]
    Config(#[from] config::ConfigError),
    #[error(transparent)]
    MonteCarlo(#[from] montecarlo::McError),
    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),
    #[error("json output: {0}")]
    Json(#[from] serde_json::Error),
}
