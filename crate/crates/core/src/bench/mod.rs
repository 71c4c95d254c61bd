//! Experiment orchestration: config, training runs, the controller
//! evaluation protocol and curve data for plotting.

mod config;
mod eval;
mod plot;
mod train;

pub use config::ExperimentConfig;
pub use eval::{
    cmd_eval, evaluate, mu_schedule, write_eval_rows, write_eval_summary, Controller, ControllerSummary, EvalReport,
    EvalRow, Portfolio,
};
pub use plot::{cmd_plot, moving_average, read_train_log, smooth_log, write_curves, CurvePoint};
pub use train::{cmd_train, write_train_log, Variant, TrainSummary};

use std::path::PathBuf;

use thiserror::Error;

use crate::contingency::ContingencyError;
use crate::env::EnvError;
use crate::planner::PlannerError;
use crate::qlearn::QError;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("config: {0}")]
    Config(String),
    #[error("missing checkpoint {}", .0.display())]
    MissingCheckpoint(PathBuf),
    #[error("{} has no data rows", .0.display())]
    EmptyLog(PathBuf),
    #[error("unknown controller {0:?}")]
    UnknownController(String),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Learner(#[from] QError),
    #[error(transparent)]
    Contingency(#[from] ContingencyError),
    #[error(transparent)]
    Planner(#[from] PlannerError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, BenchError>;
