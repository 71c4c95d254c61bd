use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::train::{Variant, OPTIMAL_CHECKPOINT};
use super::{BenchError, ExperimentConfig, Result};
use crate::contingency::{play_episode, EpisodeTrace, InitialState};
use crate::env::{Behaviour, EnvParams, Simulator};
use crate::planner::{run_episode, PlannerConfig};
use crate::qlearn::{load_checkpoint, Policy, QNetwork};

/// The five evaluated controllers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Controller {
    PiStar,
    Pi1NoInit,
    Pi1Init,
    HNoInit,
    HInit,
}

impl Controller {
    pub const ALL: [Controller; 5] =
        [Controller::PiStar, Controller::Pi1NoInit, Controller::Pi1Init, Controller::HNoInit, Controller::HInit];

    pub fn name(self) -> &'static str {
        match self {
            Controller::PiStar => "pi_star",
            Controller::Pi1NoInit => "pi1_noinit",
            Controller::Pi1Init => "pi1_init",
            Controller::HNoInit => "h_noinit",
            Controller::HInit => "h_init",
        }
    }

    /// Contingency variant the controller depends on, if any.
    pub fn variant(self) -> Option<Variant> {
        match self {
            Controller::PiStar => None,
            Controller::Pi1NoInit | Controller::HNoInit => Some(Variant::NoInit),
            Controller::Pi1Init | Controller::HInit => Some(Variant::Init),
        }
    }

    pub fn parse_list(list: &str) -> Result<Vec<Controller>> {
        let mut out: Vec<Controller> = list
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(str::parse)
            .collect::<Result<_>>()?;
        out.sort();
        out.dedup();
        Ok(out)
    }
}

impl fmt::Display for Controller {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Controller {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self> {
        Controller::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| BenchError::UnknownController(s.to_string()))
    }
}

/// Trained networks available to the controllers.
#[derive(Debug, Clone, Default)]
pub struct Portfolio {
    pub pi_star: Option<QNetwork>,
    pub pi1_noinit: Option<QNetwork>,
    pub pi1_init: Option<QNetwork>,
}

impl Portfolio {
    /// Loads the checkpoints that `controllers` need from `dir`.
    pub fn load(dir: &Path, controllers: &[Controller]) -> Result<Self> {
        let load = |name: String| -> Result<QNetwork> {
            let path = dir.join(name);
            if !path.is_file() {
                return Err(BenchError::MissingCheckpoint(path));
            }
            Ok(load_checkpoint(&path)?.network)
        };
        let mut p = Portfolio::default();
        let needs = |v: Option<Variant>| controllers.iter().any(|c| c.variant() == v);
        if controllers.iter().any(|c| *c != Controller::Pi1NoInit && *c != Controller::Pi1Init) {
            p.pi_star = Some(load(OPTIMAL_CHECKPOINT.to_string())?);
        }
        if needs(Some(Variant::NoInit)) {
            p.pi1_noinit = Some(load(Variant::NoInit.contingency_checkpoint())?);
        }
        if needs(Some(Variant::Init)) {
            p.pi1_init = Some(load(Variant::Init.contingency_checkpoint())?);
        }
        Ok(p)
    }

    fn get(&self, which: Option<Variant>) -> Result<&QNetwork> {
        let (net, name) = match which {
            None => (&self.pi_star, OPTIMAL_CHECKPOINT.to_string()),
            Some(Variant::NoInit) => (&self.pi1_noinit, Variant::NoInit.contingency_checkpoint()),
            Some(Variant::Init) => (&self.pi1_init, Variant::Init.contingency_checkpoint()),
        };
        net.as_ref().ok_or_else(|| BenchError::MissingCheckpoint(name.into()))
    }
}

/// Behaviour vectors for one repetition: all `2^n` combinations cycled when
/// they fit in `m_eval`, otherwise `m_eval` distinct draws.
pub fn mu_schedule<R: Rng>(n: usize, m_eval: usize, rng: &mut R) -> Vec<EnvParams> {
    let decode = |bits: usize| {
        EnvParams::new(
            (0..n)
                .map(|i| if bits >> (n - 1 - i) & 1 == 1 { Behaviour::Aggressive } else { Behaviour::Cooperative })
                .collect(),
        )
    };
    let space = if n >= usize::BITS as usize { usize::MAX } else { 1usize << n };
    if space <= m_eval {
        (0..m_eval).map(|j| decode(j % space)).collect()
    } else {
        rand::seq::index::sample(rng, space, m_eval).into_iter().map(decode).collect()
    }
}

/// Outcome of one evaluation episode.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalRow {
    pub controller: String,
    pub repetition: usize,
    pub episode: usize,
    pub mu: String,
    pub spawn_seed: u64,
    pub steps: usize,
    pub score: f64,
    pub collision: bool,
    pub success: bool,
    pub timeout: bool,
    pub mean_ego_speed: f64,
    /// Steps on which the hierarchical controller acted with the contingency policy.
    pub contingency_steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ControllerSummary {
    pub controller: String,
    pub episodes: usize,
    pub successes: usize,
    pub collisions: usize,
    pub timeouts: usize,
    pub success_rate: f64,
    /// Mean score over episodes without a collision; NaN when every episode collided.
    pub avg_score: f64,
    pub mean_ego_speed: f64,
}

impl ControllerSummary {
    pub fn from_rows<'a>(controller: &str, rows: impl IntoIterator<Item = &'a EvalRow>) -> Self {
        let rows: Vec<&EvalRow> = rows.into_iter().collect();
        let episodes = rows.len();
        let successes = rows.iter().filter(|r| r.success).count();
        let collisions = rows.iter().filter(|r| r.collision).count();
        let timeouts = rows.iter().filter(|r| r.timeout).count();
        let safe: Vec<f64> = rows.iter().filter(|r| !r.collision).map(|r| r.score).collect();
        let mean = |xs: &[f64]| if xs.is_empty() { f64::NAN } else { xs.iter().sum::<f64>() / xs.len() as f64 };
        let speeds: Vec<f64> = rows.iter().map(|r| r.mean_ego_speed).collect();
        Self {
            controller: controller.to_string(),
            episodes,
            successes,
            collisions,
            timeouts,
            success_rate: if episodes == 0 { f64::NAN } else { successes as f64 / episodes as f64 },
            avg_score: mean(&safe),
            mean_ego_speed: mean(&speeds),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    /// Ordered by controller, repetition, episode.
    pub rows: Vec<EvalRow>,
    pub summaries: Vec<ControllerSummary>,
}

impl EvalReport {
    pub fn summary(&self, c: Controller) -> Option<&ControllerSummary> {
        self.summaries.iter().find(|s| s.controller == c.name())
    }
}

struct Job {
    repetition: usize,
    episode: usize,
    mu: EnvParams,
    spawn_seed: u64,
    episode_seed: u64,
}

/// Per-repetition base stream; chosen away from the training streams.
const EVAL_STREAM: u64 = 1000;

fn jobs(cfg: &ExperimentConfig) -> Vec<Job> {
    let mut out = Vec::new();
    for repetition in 0..cfg.eval_repetitions {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(EVAL_STREAM + repetition as u64);
        let schedule = mu_schedule(cfg.env.n_targets, cfg.planner.m_eval, &mut rng);
        for (episode, mu) in schedule.into_iter().enumerate() {
            out.push(Job { repetition, episode, mu, spawn_seed: rng.gen(), episode_seed: rng.gen() });
        }
    }
    out
}

fn mean_ego_speed(trace: &EpisodeTrace) -> f64 {
    let n = trace.observations.len().max(1) as f64;
    trace.observations.iter().map(|o| o.ego_speed).sum::<f64>() / n
}

fn run_job(
    sim: &Simulator,
    controller: Controller,
    portfolio: &Portfolio,
    planner: &PlannerConfig,
    job: &Job,
) -> Result<EvalRow> {
    let mut rng = ChaCha8Rng::seed_from_u64(job.episode_seed);
    let (trace, contingency_steps) = match controller {
        Controller::PiStar | Controller::Pi1NoInit | Controller::Pi1Init => {
            let net = portfolio.get(controller.variant())?;
            let init = InitialState { state: sim.reset(&job.mu, job.spawn_seed)?, cum_offset: 0.0, handoff: false };
            (play_episode(sim, net, init, |_| 0.0, &mut rng)?, 0)
        }
        Controller::HNoInit | Controller::HInit => {
            let pi_star = portfolio.get(None)?;
            let pi1 = portfolio.get(controller.variant())?;
            let policies: [&dyn Policy; 2] = [pi_star, pi1];
            let ep = run_episode(sim, &policies, &job.mu, job.spawn_seed, planner, &mut rng)?;
            let switched = ep.chosen().iter().filter(|&&c| c != 0).count();
            (ep.trace, switched)
        }
    };
    Ok(EvalRow {
        controller: controller.name().to_string(),
        repetition: job.repetition,
        episode: job.episode,
        mu: job.mu.label(),
        spawn_seed: job.spawn_seed,
        steps: trace.len(),
        score: trace.raw_score(),
        collision: trace.collision,
        success: trace.success,
        timeout: !trace.collision && !trace.success,
        mean_ego_speed: mean_ego_speed(&trace),
        contingency_steps,
    })
}

/// Runs every controller on the same `(mu, spawn seed)` episodes. Episodes run
/// in parallel; rows come back in a fixed order.
pub fn evaluate(cfg: &ExperimentConfig, controllers: &[Controller], portfolio: &Portfolio) -> Result<EvalReport> {
    cfg.validate()?;
    let sim = Simulator::new(cfg.env.clone())?;
    let jobs = jobs(cfg);
    let mut rows = Vec::with_capacity(jobs.len() * controllers.len());
    for &c in controllers {
        let part = jobs
            .par_iter()
            .map(|job| run_job(&sim, c, portfolio, &cfg.planner, job))
            .collect::<Result<Vec<_>>>()?;
        rows.extend(part);
    }
    let summaries = controllers
        .iter()
        .map(|c| ControllerSummary::from_rows(c.name(), rows.iter().filter(|r| r.controller == c.name())))
        .collect();
    Ok(EvalReport { rows, summaries })
}

pub fn write_eval_rows<W: Write>(w: W, rows: &[EvalRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_eval_summary<W: Write>(w: W, summaries: &[ControllerSummary]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for s in summaries {
        out.serialize(s)?;
    }
    out.flush()?;
    Ok(())
}

pub const EVAL_ROWS: &str = "eval_rows.csv";
pub const EVAL_SUMMARY: &str = "eval_summary.csv";

/// Loads checkpoints from `cfg.out_dir`, evaluates and writes
/// `eval_rows.csv` and `eval_summary.csv` next to them.
pub fn cmd_eval(cfg: &ExperimentConfig, controllers: &[Controller]) -> Result<EvalReport> {
    let portfolio = Portfolio::load(&cfg.out_dir, controllers)?;
    let report = evaluate(cfg, controllers, &portfolio)?;
    fs::create_dir_all(&cfg.out_dir)?;
    write_eval_rows(fs::File::create(cfg.out_dir.join(EVAL_ROWS))?, &report.rows)?;
    write_eval_summary(fs::File::create(cfg.out_dir.join(EVAL_SUMMARY))?, &report.summaries)?;
    Ok(report)
}
