//! Experiment orchestration behind the command-line tool: run configuration,
//! the six commands and report rendering.

mod commands;
mod config;
mod report;
mod svg;

use std::path::PathBuf;

use thiserror::Error;

pub use commands::{
    cmd_lap, cmd_race, cmd_race_on, cmd_timing, cmd_track, cmd_train, PolicyChoice, RaceSummary, SnapshotRow,
    TimingReport, TrainSummary, MIN_TIMING_CYCLES,
};
pub use config::{BatchSpec, OpponentChoice, OpponentConfig, RunConfig, TimingConfig, TrackSpec, TrainExtras};
pub use report::{
    cmd_report, gap_series, gap_zero_crossings, load_episodes, EpisodeLog, ReportOptions, ReportOutput, PANELS,
};
pub use svg::{render as render_svg, Chart, Series, PALETTE};

use crate::agent::AgentError;
use crate::neural::NeuralError;
use crate::sim::SimError;
use crate::track::TrackError;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("run failed: {0}")]
    Failed(String),
    #[error("no episode logs found in {}", .0.display())]
    MissingLogs(PathBuf),
    #[error(transparent)]
    Track(#[from] TrackError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Neural(#[from] NeuralError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl BenchError {
    /// 1 for bad input (configuration, track data, scenario), 2 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            BenchError::Config(_) | BenchError::Track(_) | BenchError::MissingLogs(_) => 1,
            BenchError::Sim(SimError::InvalidScenario(_) | SimError::EmptyInput) => 1,
            BenchError::Agent(AgentError::InvalidConfig(_) | AgentError::Sim(SimError::EmptyInput)) => 1,
            _ => 2,
        }
    }
}
