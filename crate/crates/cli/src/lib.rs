// Copyright 2026 Compulse Contributors
// SPDX-License-Identifier: Apache-2.0

//! Command-line front end for `compulse-core`: config ingestion, experiment
//! workflows, and deterministic CSV/JSON output.
//!
//! Each command writes its files into `output_dir` together with a
//! `<command>.manifest.json` that holds the complete config and a SHA-256 of
//! every file. Passing a manifest back through `--config` reruns the same
//! experiment.

pub mod args;
pub mod commands;
pub mod config;
pub mod output;

use std::fmt::Display;

/// Failure classes; they map to exit codes 2 and 1.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    /// A rejected parameter value.
    pub fn config(e: impl Display) -> Self {
        CliError::Usage(format!("invalid configuration: {e}"))
    }

    pub fn runtime(e: impl Display) -> Self {
        CliError::Runtime(e.to_string())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl From<compulse_core::Error> for CliError {
    fn from(e: compulse_core::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}
