//! Streaming mean / standard-error accumulation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Trajectories folded per task before partial results are merged.
pub const CHUNK: usize = 64;

/// Welford accumulator for a scalar.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RunningStat {
    count: u64,
    mean: f64,
    m2: f64,
}

impl RunningStat {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    /// Combines two accumulators with the pairwise mean/variance update.
    pub fn merge(&mut self, other: &RunningStat) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let n = (self.count + other.count) as f64;
        let delta = other.mean - self.mean;
        self.mean += delta * other.count as f64 / n;
        self.m2 += other.m2 + delta * delta * self.count as f64 * other.count as f64 / n;
        self.count += other.count;
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance; zero for fewer than two samples.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            (self.m2 / (self.count - 1) as f64).max(0.0)
        }
    }

    pub fn stderr(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            (self.variance() / self.count as f64).sqrt()
        }
    }
}

/// Two-sample Kolmogorov-Smirnov statistic.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Pointwise mean and standard error of an ensemble of sampled curves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSeries {
    pub dt: f64,
    pub count: u64,
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
    /// Mean and standard error of the per-member efficiency `Σ x_s dt`.
    pub efficiency: (f64, f64),
}

impl EnsembleSeries {
    pub fn from_stats(dt: f64, stats: &[RunningStat], efficiency: &RunningStat) -> Self {
        EnsembleSeries {
            dt,
            count: efficiency.count(),
            mean: stats.iter().map(RunningStat::mean).collect(),
            stderr: stats.iter().map(RunningStat::stderr).collect(),
            efficiency: (efficiency.mean(), efficiency.stderr()),
        }
    }

    pub fn len(&self) -> usize {
        self.mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean.is_empty()
    }

    /// Largest `|mean - reference|` over all samples.
    pub fn max_deviation(&self, reference: &[f64]) -> f64 {
        self.mean
            .iter()
            .zip(reference)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Runs `sample(k)` for `k in 0..count` on the rayon pool and folds the
/// curves into pointwise statistics.
///
/// Work is split into fixed chunks of [`CHUNK`] indices and partial results
/// are merged in chunk order, so the output does not depend on the number
/// of worker threads.
pub fn accumulate<F>(count: usize, len: usize, dt: f64, sample: F) -> Result<EnsembleSeries>
where
    F: Fn(usize) -> Result<Vec<f64>> + Sync,
{
    if count == 0 {
        return Err(Error::Empty("ensemble"));
    }
    let partials = (0..count.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut acc = vec![RunningStat::default(); len];
            let mut eta = RunningStat::default();
            for k in c * CHUNK..((c + 1) * CHUNK).min(count) {
                let curve = sample(k)?;
                if curve.len() != len {
                    return Err(Error::Dimension {
                        expected: len,
                        found: curve.len(),
                    });
                }
                eta.push(curve.iter().sum::<f64>() * dt);
                acc.iter_mut().zip(curve).for_each(|(a, x)| a.push(x));
            }
            Ok((acc, eta))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut total = vec![RunningStat::default(); len];
    let mut eta = RunningStat::default();
    for (part, part_eta) in &partials {
        total.iter_mut().zip(part).for_each(|(t, p)| t.merge(p));
        eta.merge(part_eta);
    }
    Ok(EnsembleSeries::from_stats(dt, &total, &eta))
}
