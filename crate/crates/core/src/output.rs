//! Run outputs: per-strategy hourly time series, the JSON summary and the
//! mean-curve tables behind `plot-data`.
//!
//! Layout under the output directory:
//!
//! ```text
//! summary.json
//! <strategy>/timeseries.csv    replication,hour,q_households,q_traffic_lights,failed_components,passable_links
//! <strategy>/mean_curve.csv    hour,q_households,q_traffic_lights   (written by plot_data)
//! ```

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::engine::ReplicationResult;
use crate::error::{Result, SimError};
use crate::metrics::{improvement_pct, restoration_quantiles, trl, QualitySeries};
use crate::montecarlo::MonteCarloOutcome;
use crate::restoration::Strategy;

pub const TIMESERIES_HEADER: &str = "replication,hour,q_households,q_traffic_lights,failed_components,passable_links";
pub const SUMMARY_FILE: &str = "summary.json";
pub const TIMESERIES_FILE: &str = "timeseries.csv";
pub const MEAN_CURVE_FILE: &str = "mean_curve.csv";

/// Settings echoed into the summary so a file identifies its run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunInfo {
    pub base_seed: u64,
    pub teams: u32,
    pub confidence: f64,
    pub relative_half_width: f64,
    pub min_replications: usize,
    pub max_replications: usize,
    pub crew_access_dependence: bool,
    pub fuel_dependence: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HouseholdMetrics {
    pub mean_trl: f64,
    pub trl_over_mpr_pct: Option<f64>,
    pub improvement_pct: Option<f64>,
    pub mean_hours_to_75: f64,
    pub mean_hours_to_90: f64,
    pub mean_hours_to_100: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrafficLightMetrics {
    pub mean_trl: f64,
    pub trl_over_mpr_pct: Option<f64>,
    pub improvement_pct: Option<f64>,
    pub mean_hours_to_100: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategySummary {
    pub strategy: Strategy,
    pub replications: usize,
    pub converged: bool,
    /// Mean of the per-replication time-averaged household quality.
    pub mean_statistic: f64,
    pub ci_half_width: f64,
    pub households: HouseholdMetrics,
    pub traffic_lights: TrafficLightMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub run: RunInfo,
    /// Strategy improvements are measured against.
    pub baseline: Strategy,
    /// MPR horizons: the baseline's mean 100 % restoration hour.
    pub mpr_households_h: f64,
    pub mpr_traffic_lights_h: f64,
    pub strategies: Vec<StrategySummary>,
}

/// Results of one strategy, in seed order.
#[derive(Debug, Clone)]
pub struct StrategyRun {
    pub strategy: Strategy,
    pub outcome: MonteCarloOutcome<ReplicationResult>,
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

fn full_hour(series: &QualitySeries) -> Result<f64> {
    Ok(restoration_quantiles(series, &[1.0])?[0] as f64)
}

fn pct(trl: f64, horizon: f64) -> Option<f64> {
    (horizon > 0.0).then(|| trl / horizon * 100.0)
}

pub fn summarize(runs: &[StrategyRun], info: RunInfo) -> Result<Summary> {
    let first = runs.first().ok_or_else(|| SimError::InvalidParams("no strategy results to summarize".into()))?;
    let baseline = runs.iter().find(|r| r.strategy == Strategy::ComponentBased).unwrap_or(first);
    let mean_of = |r: &StrategyRun, f: &dyn Fn(&ReplicationResult) -> Result<f64>| -> Result<f64> {
        let v = r.outcome.records.iter().map(f).collect::<Result<Vec<f64>>>()?;
        Ok(mean(v.into_iter()))
    };
    let hh_trl = |r: &ReplicationResult| Ok(trl(&r.households));
    let tl_trl = |r: &ReplicationResult| Ok(trl(&r.traffic_lights));
    let mpr_households_h = mean_of(baseline, &|r| full_hour(&r.households))?;
    let mpr_traffic_lights_h = mean_of(baseline, &|r| full_hour(&r.traffic_lights))?;
    let base_hh = mean_of(baseline, &hh_trl)?;
    let base_tl = mean_of(baseline, &tl_trl)?;
    let compare = baseline.strategy == Strategy::ComponentBased;
    let improvement = |value: f64, base: f64| compare.then(|| improvement_pct(value, base).ok()).flatten();

    let mut strategies = Vec::with_capacity(runs.len());
    for run in runs {
        let quantiles = |q: usize| mean_of(run, &|r| Ok(restoration_quantiles(&r.households, &[0.75, 0.90, 1.0])?[q] as f64));
        let hh = mean_of(run, &hh_trl)?;
        let tl = mean_of(run, &tl_trl)?;
        strategies.push(StrategySummary {
            strategy: run.strategy,
            replications: run.outcome.records.len(),
            converged: run.outcome.converged,
            mean_statistic: run.outcome.mean,
            ci_half_width: run.outcome.half_width,
            households: HouseholdMetrics {
                mean_trl: hh,
                trl_over_mpr_pct: pct(hh, mpr_households_h),
                improvement_pct: improvement(hh, base_hh),
                mean_hours_to_75: quantiles(0)?,
                mean_hours_to_90: quantiles(1)?,
                mean_hours_to_100: quantiles(2)?,
            },
            traffic_lights: TrafficLightMetrics {
                mean_trl: tl,
                trl_over_mpr_pct: pct(tl, mpr_traffic_lights_h),
                improvement_pct: improvement(tl, base_tl),
                mean_hours_to_100: mean_of(run, &|r| full_hour(&r.traffic_lights))?,
            },
        });
    }
    Ok(Summary { run: info, baseline: baseline.strategy, mpr_households_h, mpr_traffic_lights_h, strategies })
}

pub fn timeseries_csv(records: &[ReplicationResult]) -> String {
    let mut out = String::from(TIMESERIES_HEADER);
    out.push('\n');
    for (i, r) in records.iter().enumerate() {
        for h in &r.hours {
            writeln!(
                out,
                "{i},{},{},{},{},{}",
                h.hour, h.q_households, h.q_traffic_lights, h.failed_components, h.passable_links
            )
            .unwrap();
        }
    }
    out
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| SimError::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| SimError::io(path, e))
}

pub fn summary_json(summary: &Summary) -> String {
    let mut s = serde_json::to_string_pretty(summary).expect("summary serializes");
    s.push('\n');
    s
}

/// Writes every strategy's time series and the summary; returns the summary.
pub fn emit_outputs(runs: &[StrategyRun], info: RunInfo, out_dir: &Path) -> Result<Summary> {
    let summary = summarize(runs, info)?;
    for run in runs {
        let path = out_dir.join(run.strategy.name()).join(TIMESERIES_FILE);
        write(&path, &timeseries_csv(&run.outcome.records))?;
    }
    write(&out_dir.join(SUMMARY_FILE), &summary_json(&summary))?;
    Ok(summary)
}

struct Row {
    replication: usize,
    hour: usize,
    q_households: f64,
    q_traffic_lights: f64,
}

fn parse_timeseries(path: &Path) -> Result<Vec<Row>> {
    let text = fs::read_to_string(path).map_err(|e| SimError::io(path, e))?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == TIMESERIES_HEADER => {}
        _ => return Err(SimError::parse(path, 1, format!("expected header `{TIMESERIES_HEADER}`"))),
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        let bad = || SimError::parse(path, i + 1, format!("malformed row `{line}`"));
        if f.len() != 6 {
            return Err(bad());
        }
        rows.push(Row {
            replication: f[0].parse().map_err(|_| bad())?,
            hour: f[1].parse().map_err(|_| bad())?,
            q_households: f[2].parse().map_err(|_| bad())?,
            q_traffic_lights: f[3].parse().map_err(|_| bad())?,
        });
    }
    Ok(rows)
}

/// Mean quality per hour across replications; a finished replication holds
/// its final value.
pub fn mean_curve_csv(path: &Path) -> Result<String> {
    let rows = parse_timeseries(path)?;
    let reps = rows.iter().map(|r| r.replication + 1).max().unwrap_or(0);
    let horizon = rows.iter().map(|r| r.hour + 1).max().unwrap_or(0);
    let mut hh = vec![vec![f64::NAN; horizon]; reps];
    let mut tl = vec![vec![f64::NAN; horizon]; reps];
    for r in &rows {
        hh[r.replication][r.hour] = r.q_households;
        tl[r.replication][r.hour] = r.q_traffic_lights;
    }
    for series in hh.iter_mut().chain(tl.iter_mut()) {
        let mut last = 1.0;
        for v in series.iter_mut() {
            if v.is_nan() {
                *v = last;
            } else {
                last = *v;
            }
        }
    }
    let mut out = String::from("hour,q_households,q_traffic_lights\n");
    for h in 0..horizon {
        let m = |s: &[Vec<f64>]| s.iter().map(|r| r[h]).sum::<f64>() / reps as f64;
        writeln!(out, "{h},{},{}", m(&hh), m(&tl)).unwrap();
    }
    Ok(out)
}

/// Writes `mean_curve.csv` next to every strategy time series under `out_dir`.
pub fn plot_data(out_dir: &Path) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    for s in Strategy::ALL {
        let src = out_dir.join(s.name()).join(TIMESERIES_FILE);
        if !src.exists() {
            continue;
        }
        let dst = out_dir.join(s.name()).join(MEAN_CURVE_FILE);
        write(&dst, &mean_curve_csv(&src)?)?;
        written.push(dst);
    }
    if written.is_empty() {
        return Err(SimError::InvalidParams(format!("no {TIMESERIES_FILE} found under {}", out_dir.display())));
    }
    Ok(written)
}
