//! Feature histograms and the L1 distance between them.

use serde::{Deserialize, Serialize};

use super::{ContingencyError, Result};
use crate::env::Observation;

/// Trajectory feature: ego speed.
pub fn feature(o: &Observation) -> f64 {
    o.ego_speed
}

/// Equal-width bins over `[lo, hi]`. Values outside are clamped into the end bins.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Binning {
    pub lo: f64,
    pub hi: f64,
    pub bins: usize,
}

impl Binning {
    pub fn new(lo: f64, hi: f64, bins: usize) -> Result<Self> {
        if bins == 0 || !(hi > lo) {
            return Err(ContingencyError::InvalidBinning { lo, hi, bins });
        }
        Ok(Self { lo, hi, bins })
    }

    pub fn width(&self) -> f64 {
        (self.hi - self.lo) / self.bins as f64
    }

    pub fn index(&self, x: f64) -> usize {
        let k = ((x - self.lo) / self.width()).floor();
        if k.is_nan() || k < 0.0 {
            0
        } else {
            (k as usize).min(self.bins - 1)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureHistogram {
    binning: Binning,
    masses: Vec<f64>,
    count: usize,
}

impl FeatureHistogram {
    /// Wraps raw bin masses, renormalizing them to sum to one.
    pub fn from_masses(binning: Binning, masses: Vec<f64>) -> Result<Self> {
        if masses.len() != binning.bins || masses.iter().any(|m| !(*m >= 0.0)) {
            return Err(ContingencyError::InvalidMasses);
        }
        let total: f64 = masses.iter().sum();
        if !(total > 0.0) {
            return Err(ContingencyError::InvalidMasses);
        }
        let masses = masses.into_iter().map(|m| m / total).collect();
        Ok(Self { binning, masses, count: 0 })
    }

    pub fn binning(&self) -> &Binning {
        &self.binning
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn count(&self) -> usize {
        self.count
    }
}

/// Normalized histogram of `samples`.
pub fn build_density(samples: &[f64], binning: Binning) -> Result<FeatureHistogram> {
    if samples.is_empty() {
        return Err(ContingencyError::EmptySamples);
    }
    let mut counts = vec![0usize; binning.bins];
    for &x in samples {
        counts[binning.index(x)] += 1;
    }
    let n = samples.len() as f64;
    Ok(FeatureHistogram {
        binning,
        masses: counts.into_iter().map(|c| c as f64 / n).collect(),
        count: samples.len(),
    })
}

/// Sum of absolute mass differences, in `[0, 2]`.
pub fn trajectory_metric(a: &FeatureHistogram, b: &FeatureHistogram) -> Result<f64> {
    if a.binning != b.binning {
        return Err(ContingencyError::BinningMismatch);
    }
    Ok(a.masses.iter().zip(&b.masses).map(|(x, y)| (x - y).abs()).sum())
}
