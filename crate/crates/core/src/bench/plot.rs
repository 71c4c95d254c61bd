use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{BenchError, Result};
use crate::contingency::{EpisodeRecord, Role};

/// Trailing moving average: entry `i` averages the last `window` values up to
/// and including `i` (fewer at the start). `window = 1` is the identity.
pub fn moving_average(xs: &[f64], window: usize) -> Vec<f64> {
    let w = window.max(1);
    let mut out = Vec::with_capacity(xs.len());
    let mut sum = 0.0;
    for i in 0..xs.len() {
        sum += xs[i];
        if i >= w {
            sum -= xs[i - w];
        }
        let n = (i + 1).min(w);
        out.push(if w == 1 { xs[i] } else { sum / n as f64 });
    }
    out
}

/// Like [`moving_average`] over the present values only.
fn moving_average_opt(xs: &[Option<f64>], window: usize) -> Vec<Option<f64>> {
    let w = window.max(1);
    (0..xs.len())
        .map(|i| {
            let lo = (i + 1).saturating_sub(w);
            let present: Vec<f64> = xs[lo..=i].iter().flatten().copied().collect();
            if present.is_empty() {
                None
            } else {
                Some(present.iter().sum::<f64>() / present.len() as f64)
            }
        })
        .collect()
}

/// One smoothed point of a training curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub policy: String,
    pub episode: u64,
    pub total_steps: u64,
    pub raw_score: f64,
    pub penalized_score: f64,
    pub metric: Option<f64>,
}

/// Per-policy smoothed score and metric series, policies in first-seen order.
pub fn smooth_log(log: &[EpisodeRecord], window: usize) -> Vec<CurvePoint> {
    let mut roles: Vec<Role> = Vec::new();
    for r in log {
        if !roles.contains(&r.policy) {
            roles.push(r.policy);
        }
    }
    let mut out = Vec::new();
    for role in roles {
        let rows: Vec<&EpisodeRecord> = log.iter().filter(|r| r.policy == role).collect();
        let raw = moving_average(&rows.iter().map(|r| r.raw_score).collect::<Vec<_>>(), window);
        let pen = moving_average(&rows.iter().map(|r| r.penalized_score).collect::<Vec<_>>(), window);
        let metric = moving_average_opt(&rows.iter().map(|r| r.metric).collect::<Vec<_>>(), window);
        for (i, r) in rows.iter().enumerate() {
            out.push(CurvePoint {
                policy: role.id().to_string(),
                episode: r.episode,
                total_steps: r.total_steps,
                raw_score: raw[i],
                penalized_score: pen[i],
                metric: metric[i],
            });
        }
    }
    out
}

pub fn write_curves<W: Write>(w: W, points: &[CurvePoint]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for p in points {
        out.serialize(p)?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Deserialize)]
struct LogRow {
    episode: u64,
    policy: String,
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

/// Parses a training log written by `cmd_train`.
pub fn read_train_log<R: Read>(r: R) -> Result<Vec<EpisodeRecord>> {
    let mut rdr = csv::Reader::from_reader(r);
    let mut out = Vec::new();
    for row in rdr.deserialize() {
        let row: LogRow = row?;
        let policy = Role::from_id(&row.policy)
            .ok_or_else(|| BenchError::Config(format!("unknown policy {:?} in training log", row.policy)))?;
        out.push(EpisodeRecord {
            policy,
            episode: row.episode,
            total_steps: row.total_steps,
            raw_score: row.raw_score,
            penalized_score: row.penalized_score,
            metric: row.metric,
            epsilon: row.epsilon,
            steps: row.steps,
            handoff_init: row.handoff_init != 0,
            collision: row.collision != 0,
            success: row.success != 0,
        });
    }
    Ok(out)
}

/// Writes `<stem>_curves.csv` into `out_dir` for each training log.
pub fn cmd_plot(logs: &[PathBuf], window: usize, out_dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();
    for path in logs {
        let log = read_train_log(fs::File::open(path)?)?;
        if log.is_empty() {
            return Err(BenchError::EmptyLog(path.clone()));
        }
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("log");
        let target = out_dir.join(format!("{stem}_curves.csv"));
        write_curves(fs::File::create(&target)?, &smooth_log(&log, window))?;
        written.push(target);
    }
    Ok(written)
}
