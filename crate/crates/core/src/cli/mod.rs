//! Command-line front end: device configuration, deterministic simulated
//! experiments, calibration files and fidelity-map sweeps.
//!
//! The command functions return their reports and file contents as strings
//! so that the binary stays a thin argument-parsing shell.

mod calfile;
mod commands;
mod config;
mod seed;

pub use calfile::{read_calibration, write_calibration, CalibrationFile};
pub use commands::{
    cmd_calibrate, cmd_design, cmd_reconstruct, cmd_sweep, summarize, DesignReport, SweepOutput,
    SweepRow,
};
pub use config::{CountMode, DeviceConfig, Grid, SweepConfig, EXACT_NOMINAL_TOTAL};
pub use seed::{derive_seed, splitmix64};

use thiserror::Error;

use crate::error::PolError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Numerical,
    Io,
}

#[derive(Debug, Error)]
#[error("{message}")]
pub struct CliError {
    pub kind: ErrorKind,
    pub message: String,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        Self { kind: ErrorKind::Config, message: message.into() }
    }

    pub fn numerical(message: impl Into<String>) -> Self {
        Self { kind: ErrorKind::Numerical, message: message.into() }
    }

    pub fn io(message: impl Into<String>) -> Self {
        Self { kind: ErrorKind::Io, message: message.into() }
    }

    pub(crate) fn from_config(e: PolError) -> Self {
        Self::config(e.to_string())
    }

    /// 2 for configuration/input errors, 3 for numerical failures, 4 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self.kind {
            ErrorKind::Config => 2,
            ErrorKind::Numerical => 3,
            ErrorKind::Io => 4,
        }
    }

    pub fn context(mut self, ctx: impl std::fmt::Display) -> Self {
        self.message = format!("{ctx}: {}", self.message);
        self
    }
}

impl From<PolError> for CliError {
    fn from(e: PolError) -> Self {
        match e {
            PolError::InvalidParameter(_) | PolError::EmptyCounts | PolError::NotPure(_) => {
                Self::config(e.to_string())
            }
            _ => Self::numerical(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::io(e.to_string())
    }
}
