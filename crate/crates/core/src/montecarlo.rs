//! Replicated runs with a sequential confidence-interval stopping rule.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::engine::{run_replication, ReplicationConfig, ReplicationResult, Simulation};
use crate::error::{Result, SimError};
use crate::restoration::Strategy;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloConfig {
    pub confidence: f64,
    /// Stop once the interval half-width is at most this fraction of the mean.
    pub relative_half_width: f64,
    pub min_replications: usize,
    pub max_replications: usize,
    pub base_seed: u64,
}

impl Default for MonteCarloConfig {
    fn default() -> Self {
        Self {
            confidence: 0.90,
            relative_half_width: 0.10,
            min_replications: 10,
            max_replications: 1000,
            base_seed: 1,
        }
    }
}

impl MonteCarloConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return Err(SimError::InvalidParams("confidence must lie strictly between 0 and 1".into()));
        }
        if !(self.relative_half_width > 0.0) {
            return Err(SimError::InvalidParams("relative half-width must be positive".into()));
        }
        if self.min_replications < 2 || self.max_replications < self.min_replications {
            return Err(SimError::InvalidParams(
                "need 2 <= min_replications <= max_replications".into(),
            ));
        }
        Ok(())
    }

    pub fn seed(&self, replication: usize) -> u64 {
        self.base_seed.wrapping_add(replication as u64)
    }
}

/// Two-sided standard normal quantile for `confidence`.
pub fn z_value(confidence: f64) -> f64 {
    let n = Normal::standard();
    n.inverse_cdf(0.5 + confidence / 2.0)
}

pub fn mean_and_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    // Constant input is exact; summation would otherwise leave rounding noise.
    if values.iter().all(|&v| v == values[0]) {
        return (values[0], 0.0);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

/// Normal-approximation half-width of the interval for the mean.
pub fn ci_half_width(values: &[f64], confidence: f64) -> f64 {
    let (_, sd) = mean_and_sd(values);
    z_value(confidence) * sd / (values.len() as f64).sqrt()
}

fn precise_enough(values: &[f64], cfg: &MonteCarloConfig) -> bool {
    let (mean, _) = mean_and_sd(values);
    ci_half_width(values, cfg.confidence) <= cfg.relative_half_width * mean.abs()
}

#[derive(Debug, Clone)]
pub struct MonteCarloOutcome<T> {
    pub records: Vec<T>,
    pub statistics: Vec<f64>,
    pub mean: f64,
    pub half_width: f64,
    pub converged: bool,
}

/// Runs `replicate(seed)` for seeds `base_seed + i` until the interval on
/// `statistic` is tight enough or `max_replications` is reached. Work is
/// done in parallel batches; the stopping point is decided in seed order,
/// so the outcome does not depend on the thread count.
pub fn run_sequential<T, F, S>(cfg: &MonteCarloConfig, replicate: F, statistic: S) -> Result<MonteCarloOutcome<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync,
    S: Fn(&T) -> f64,
{
    cfg.validate()?;
    let batch = rayon::current_num_threads().max(4);
    let mut records: Vec<T> = Vec::new();
    let mut stats: Vec<f64> = Vec::new();
    let mut stop_at = None;
    while stop_at.is_none() && records.len() < cfg.max_replications {
        let from = records.len();
        let to = if from == 0 { cfg.min_replications } else { (from + batch).min(cfg.max_replications) };
        let fresh = (from..to).into_par_iter().map(|i| replicate(cfg.seed(i))).collect::<Result<Vec<T>>>()?;
        for r in fresh {
            stats.push(statistic(&r));
            records.push(r);
            let n = stats.len();
            if stop_at.is_none() && n >= cfg.min_replications && precise_enough(&stats, cfg) {
                stop_at = Some(n);
            }
        }
    }
    let converged = stop_at.is_some();
    let n = stop_at.unwrap_or(records.len());
    records.truncate(n);
    stats.truncate(n);
    let (mean, _) = mean_and_sd(&stats);
    Ok(MonteCarloOutcome {
        half_width: ci_half_width(&stats, cfg.confidence),
        mean,
        records,
        statistics: stats,
        converged,
    })
}

/// Replications of one strategy; the statistic is the time-averaged
/// household quality.
pub fn run_monte_carlo(
    sim: &Simulation,
    strategy: Strategy,
    crews: u32,
    cfg: &MonteCarloConfig,
) -> Result<MonteCarloOutcome<ReplicationResult>> {
    run_sequential(
        cfg,
        |seed| run_replication(sim, &ReplicationConfig::new(strategy, crews, seed)),
        |r| r.households.time_average(),
    )
}

/// Exactly `n` replications per strategy on the same seeds, for paired
/// comparisons.
pub fn run_paired(
    sim: &Simulation,
    strategies: &[Strategy],
    crews: u32,
    base_seed: u64,
    n: usize,
) -> Result<Vec<Vec<ReplicationResult>>> {
    strategies
        .iter()
        .map(|&s| {
            (0..n)
                .into_par_iter()
                .map(|i| run_replication(sim, &ReplicationConfig::new(s, crews, base_seed.wrapping_add(i as u64))))
                .collect()
        })
        .collect()
}

/// Percentile bootstrap interval for the mean of paired differences `a - b`.
pub fn paired_bootstrap_ci(a: &[f64], b: &[f64], confidence: f64, resamples: usize, seed: u64) -> Result<(f64, f64)> {
    if a.len() != b.len() || a.is_empty() {
        return Err(SimError::InvalidParams("paired samples must be non-empty and equally long".into()));
    }
    if !(confidence > 0.0 && confidence < 1.0) || resamples == 0 {
        return Err(SimError::InvalidParams("bad bootstrap settings".into()));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let n = d.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut means: Vec<f64> = (0..resamples)
        .map(|_| (0..n).map(|_| d[rng.random_range(0..n)]).sum::<f64>() / n as f64)
        .collect();
    means.sort_by(f64::total_cmp);
    let alpha = (1.0 - confidence) / 2.0;
    let pick = |p: f64| means[((p * resamples as f64).floor() as usize).min(resamples - 1)];
    Ok((pick(alpha), pick(1.0 - alpha)))
}
