//! Experiment harness: configuration files, training runs and sweeps,
//! summaries, checkpoint evaluation and open-loop simulation, all writing
//! CSV files.

pub mod config;
pub mod csvio;
pub mod eval;
pub mod run;
pub mod summary;

use std::path::{Path, PathBuf};

pub use config::{parse_config, ExperimentConfig};
pub use eval::{evaluate, evaluate_with, load_case, simulate, EvalResult, SimulateSpec};
pub use run::{
    run_repeated, run_sweep, run_training, write_outputs, RunFiles, RunOutcome, SweepParam,
    SweepSpec,
};
pub use summary::{mean_std, summarize, DEFAULT_WINDOW};

use crate::agent::AgentError;
use crate::dynamics::DynError;
use crate::env::EnvError;
use crate::netmodel::NetError;

#[derive(Debug, thiserror::Error)]
pub enum ExpError {
    #[error("config: {0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Sim(#[from] DynError),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error("{setting} run {run} has {episodes} episodes, fewer than the window of {window}")]
    WindowTooLarge {
        setting: String,
        run: usize,
        episodes: usize,
        window: usize,
    },
    #[error("checkpoint is {checkpoint:?} (obs, action) but the environment is {env:?}")]
    CheckpointMismatch {
        checkpoint: (usize, usize),
        env: (usize, usize),
    },
    #[error("run failed: {0}")]
    Run(String),
}

impl ExpError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub(crate) fn csv(path: &Path, source: csv::Error) -> Self {
        Self::Csv {
            path: path.to_path_buf(),
            source,
        }
    }

    /// Process exit status: 2 for bad input, 1 for failures while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_)
            | Self::Io { .. }
            | Self::Csv { .. }
            | Self::WindowTooLarge { .. }
            | Self::CheckpointMismatch { .. }
            | Self::Net(NetError::Parse { .. } | NetError::Validation(_)) => 2,
            Self::Env(EnvError::Config(_) | EnvError::Io { .. } | EnvError::Case(_)) => 2,
            Self::Agent(AgentError::Config(_) | AgentError::Checkpoint(_)) => 2,
            _ => 1,
        }
    }
}
