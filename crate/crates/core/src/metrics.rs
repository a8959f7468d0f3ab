//! Resilience metrics over hourly quality curves.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};

/// Slack when testing a quality sample against a restoration level.
const LEVEL_EPS: f64 = 1e-12;

/// Hourly quality samples `Q(t0), Q(t0 + 1), ...`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualitySeries {
    pub t0: u32,
    pub samples: Vec<f64>,
}

impl QualitySeries {
    pub fn new(t0: u32, samples: Vec<f64>) -> Self {
        Self { t0, samples }
    }

    /// Hour after the last sample below full quality; `t0` when the curve
    /// never dips.
    pub fn t1(&self) -> u32 {
        let last_short = self.samples.iter().rposition(|&q| q < 1.0 - LEVEL_EPS);
        self.t0 + last_short.map_or(0, |i| i as u32 + 1)
    }

    /// Quality at `hour`, holding the last sample past the end.
    pub fn at(&self, hour: u32) -> f64 {
        if hour < self.t0 || self.samples.is_empty() {
            return 1.0;
        }
        let i = ((hour - self.t0) as usize).min(self.samples.len() - 1);
        self.samples[i]
    }

    pub fn time_average(&self) -> f64 {
        if self.samples.is_empty() {
            return 1.0;
        }
        self.samples.iter().sum::<f64>() / self.samples.len() as f64
    }
}

/// Resilience loss: hourly left-rectangle sum of `1 - Q` over `[t0, t1)`.
pub fn trl(series: &QualitySeries) -> f64 {
    let n = (series.t1() - series.t0) as usize;
    series.samples[..n].iter().fold(0.0, |acc, q| acc + (1.0 - q))
}

/// Loss if nothing were ever restored over `horizon_hours`, against a
/// baseline quality of 1.
pub fn mpr(horizon_hours: f64) -> Result<f64> {
    if !(horizon_hours > 0.0) {
        return Err(SimError::InvalidParams("horizon must be positive".into()));
    }
    Ok(horizon_hours)
}

/// Percent reduction in loss relative to the baseline strategy.
pub fn improvement_pct(trl_strategy: f64, trl_baseline: f64) -> Result<f64> {
    if !(trl_baseline > 0.0) {
        return Err(SimError::UndefinedImprovement);
    }
    Ok((trl_baseline - trl_strategy) / trl_baseline * 100.0)
}

/// Hours after `t0` at which quality first reaches each level.
pub fn restoration_quantiles(series: &QualitySeries, levels: &[f64]) -> Result<Vec<u32>> {
    levels
        .iter()
        .map(|&q| {
            if !(0.0..=1.0).contains(&q) {
                return Err(SimError::InvalidParams(format!("restoration level {q} outside [0, 1]")));
            }
            series
                .samples
                .iter()
                .position(|&s| s >= q - LEVEL_EPS)
                .map(|i| i as u32)
                .ok_or_else(|| SimError::InvalidParams(format!("quality never reaches {q}")))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResilienceSummary {
    pub trl: f64,
    pub mpr: f64,
    pub improvement_pct: Option<f64>,
    /// Hours to 75 %, 90 % and 100 % restoration.
    pub hours_to_75: u32,
    pub hours_to_90: u32,
    pub hours_to_100: u32,
}

impl ResilienceSummary {
    pub fn of(series: &QualitySeries, horizon_hours: f64, baseline_trl: Option<f64>) -> Result<Self> {
        let q = restoration_quantiles(series, &[0.75, 0.90, 1.0])?;
        let trl = trl(series);
        Ok(Self {
            trl,
            mpr: mpr(horizon_hours)?,
            improvement_pct: baseline_trl.map(|b| improvement_pct(trl, b)).transpose()?,
            hours_to_75: q[0],
            hours_to_90: q[1],
            hours_to_100: q[2],
        })
    }
}
