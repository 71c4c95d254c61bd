use std::fs;
use std::io::Write;
use std::path::PathBuf;

use serde::Serialize;

use super::plot::{smooth_log, write_curves};
use super::{ExperimentConfig, Result};
use crate::contingency::{train_concurrent, EpisodeRecord, Role};
use crate::env::Simulator;
use crate::qlearn::save_checkpoint;

/// Contingency training variant: with or without hand-off initialization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Init,
    NoInit,
}

impl Variant {
    pub fn suffix(self) -> &'static str {
        match self {
            Variant::Init => "init",
            Variant::NoInit => "noinit",
        }
    }

    pub fn contingency_checkpoint(self) -> String {
        format!("pi1_{}.ckpt", self.suffix())
    }

    pub fn train_log(self) -> String {
        format!("train_log_{}.csv", self.suffix())
    }

    pub fn curves(self) -> String {
        format!("curves_{}.csv", self.suffix())
    }
}

pub const OPTIMAL_CHECKPOINT: &str = "pi_star.ckpt";

#[derive(Debug, Clone)]
pub struct TrainSummary {
    pub variant: Variant,
    pub optimal_checkpoint: PathBuf,
    pub contingency_checkpoint: PathBuf,
    pub log_path: PathBuf,
    pub curves_path: PathBuf,
    pub log: Vec<EpisodeRecord>,
}

#[derive(Serialize)]
struct LogRow<'a> {
    episode: u64,
    policy: &'a str,
    raw_score: f64,
    penalized_score: f64,
    metric: Option<f64>,
    epsilon: f64,
    steps: u64,
    total_steps: u64,
    handoff_init: u8,
    collision: u8,
    success: u8,
}

pub fn write_train_log<W: Write>(w: W, log: &[EpisodeRecord]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in log {
        out.serialize(LogRow {
            episode: r.episode,
            policy: r.policy.id(),
            raw_score: r.raw_score,
            penalized_score: r.penalized_score,
            metric: r.metric,
            epsilon: r.epsilon,
            steps: r.steps,
            total_steps: r.total_steps,
            handoff_init: r.handoff_init as u8,
            collision: r.collision as u8,
            success: r.success as u8,
        })?;
    }
    out.flush()?;
    Ok(())
}

/// Trains both agents in the all-aggressive environment and writes the
/// checkpoints, the training log and smoothed curves into `cfg.out_dir`.
/// `no_buffer_init` forces `beta = 0` and writes the `noinit` variant.
pub fn cmd_train(cfg: &ExperimentConfig, no_buffer_init: bool, mut progress: impl FnMut(&EpisodeRecord)) -> Result<TrainSummary> {
    let mut cfg = cfg.clone();
    let variant = if no_buffer_init {
        cfg.penalty.beta = 0.0;
        Variant::NoInit
    } else {
        Variant::Init
    };
    cfg.validate()?;
    fs::create_dir_all(&cfg.out_dir)?;
    let sim = Simulator::new(cfg.env.clone())?;
    let outcome = train_concurrent(&sim, &cfg.train, &cfg.penalty, cfg.seed, |r| progress(r))?;

    let echo = cfg.to_text();
    let optimal_checkpoint = cfg.out_dir.join(OPTIMAL_CHECKPOINT);
    let contingency_checkpoint = cfg.out_dir.join(variant.contingency_checkpoint());
    save_checkpoint(&optimal_checkpoint, &outcome.optimal, &echo)?;
    save_checkpoint(&contingency_checkpoint, &outcome.contingency, &echo)?;

    let log_path = cfg.out_dir.join(variant.train_log());
    write_train_log(fs::File::create(&log_path)?, &outcome.log)?;
    let curves_path = cfg.out_dir.join(variant.curves());
    write_curves(fs::File::create(&curves_path)?, &smooth_log(&outcome.log, cfg.plot_window))?;
    log::info!(
        "trained {} episodes of {} and {} of {}",
        outcome.log.iter().filter(|r| r.policy == Role::Optimal).count(),
        Role::Optimal.id(),
        outcome.log.iter().filter(|r| r.policy == Role::Contingency).count(),
        Role::Contingency.id(),
    );
    Ok(TrainSummary {
        variant,
        optimal_checkpoint,
        contingency_checkpoint,
        log_path,
        curves_path,
        log: outcome.log,
    })
}
