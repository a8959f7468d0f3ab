//! Wind fragility curves, one-shot damage sampling and repair-time draws.
//!
//! Failure probabilities take the wind speed in mph. Substation curve
//! parameters default to placeholders (medians of 140/170/200 mph with a
//! log-standard-deviation of 0.2); they are not calibrated values and should
//! be overridden from the scenario file when real parameters are available.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Result, SimError};
use crate::hazard::{wind_at, HazardScenario};
use crate::network::{ComponentKind, DamageLevel, PowerComponent, PowerNetwork, Status};

const MPS_TO_MPH: f64 = 2.23694;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lognormal {
    /// Mean of ln(wind mph).
    pub mu: f64,
    /// Standard deviation of ln(wind mph).
    pub sigma: f64,
}

impl Lognormal {
    pub fn from_median(median_mph: f64, sigma: f64) -> Self {
        Self { mu: median_mph.ln(), sigma }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let z = (x.ln() - self.mu) / self.sigma;
        0.5 * erfc(-z / std::f64::consts::SQRT_2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubstationFragilityParams {
    pub moderate: Lognormal,
    pub severe: Lognormal,
    pub complete: Lognormal,
}

impl Default for SubstationFragilityParams {
    fn default() -> Self {
        Self {
            moderate: Lognormal::from_median(140.0, 0.2),
            severe: Lognormal::from_median(170.0, 0.2),
            complete: Lognormal::from_median(200.0, 0.2),
        }
    }
}

impl SubstationFragilityParams {
    pub fn level(&self, level: DamageLevel) -> &Lognormal {
        match level {
            DamageLevel::Moderate => &self.moderate,
            DamageLevel::Severe => &self.severe,
            DamageLevel::Complete => &self.complete,
        }
    }

    /// Positive sigmas and nested exceedance curves on a 0.1 mph grid over
    /// [0, 250].
    pub fn validate(&self) -> Result<()> {
        for level in DamageLevel::ALL {
            let p = self.level(level);
            if !(p.sigma > 0.0) || !p.mu.is_finite() {
                return Err(SimError::InvalidParams(format!("substation {level} curve needs sigma > 0")));
            }
        }
        for i in 0..=2500 {
            let x = i as f64 * 0.1;
            let e = self.exceedance(x);
            if e.complete > e.severe || e.severe > e.moderate {
                return Err(SimError::InvalidParams(format!(
                    "substation curves are not nested at {x:.1} mph"
                )));
            }
        }
        Ok(())
    }

    fn exceedance(&self, x: f64) -> SubstationExceedance {
        SubstationExceedance {
            moderate: self.moderate.cdf(x),
            severe: self.severe.cdf(x),
            complete: self.complete.cdf(x),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubstationExceedance {
    pub moderate: f64,
    pub severe: f64,
    pub complete: f64,
}

impl SubstationExceedance {
    /// Most severe level whose exceedance probability is above `r`.
    pub fn classify(&self, r: f64) -> Option<DamageLevel> {
        if self.complete > r {
            Some(DamageLevel::Complete)
        } else if self.severe > r {
            Some(DamageLevel::Severe)
        } else if self.moderate > r {
            Some(DamageLevel::Moderate)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFragilityParams {
    pub w_critical: f64,
    pub w_collapse: f64,
}

impl Default for LineFragilityParams {
    /// 30 and 60 m/s, rounded to 0.1 mph.
    fn default() -> Self {
        Self {
            w_critical: (30.0 * MPS_TO_MPH * 10.0f64).round() / 10.0,
            w_collapse: (60.0 * MPS_TO_MPH * 10.0f64).round() / 10.0,
        }
    }
}

impl LineFragilityParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.w_critical > 0.0 && self.w_critical < self.w_collapse) {
            return Err(SimError::InvalidParams(format!(
                "line thresholds need 0 < w_critical < w_collapse, got {} / {}",
                self.w_critical, self.w_collapse
            )));
        }
        Ok(())
    }
}

pub fn p_fail_substation(x: f64, params: &SubstationFragilityParams) -> Result<SubstationExceedance> {
    params.validate()?;
    Ok(params.exceedance(x))
}

pub fn p_fail_tower(x: f64) -> f64 {
    (2e-7 * (0.0834 * x).exp()).min(1.0)
}

/// Flat 1% below `w_critical`, certain failure above `w_collapse`, linear in
/// between.
pub fn p_fail_line(x: f64, params: &LineFragilityParams) -> Result<f64> {
    params.validate()?;
    Ok(line_curve(x, params))
}

fn line_curve(x: f64, p: &LineFragilityParams) -> f64 {
    const FLOOR: f64 = 0.01;
    if x < p.w_critical {
        FLOOR
    } else if x > p.w_collapse {
        1.0
    } else {
        FLOOR + (1.0 - FLOOR) * (x - p.w_critical) / (p.w_collapse - p.w_critical)
    }
}

pub fn p_fail_pole(x: f64) -> f64 {
    (1e-4 * (0.0421 * x).exp()).min(1.0)
}

pub fn p_fail_conductor(x: f64) -> f64 {
    (8e-12 * x.powf(5.1731)).min(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FragilityModel {
    pub substation: SubstationFragilityParams,
    pub line: LineFragilityParams,
}

impl FragilityModel {
    pub fn validate(&self) -> Result<()> {
        self.substation.validate()?;
        self.line.validate()
    }

    /// Failure probability at wind `x`; for substations, of any damage level.
    pub fn probability(&self, kind: ComponentKind, x: f64) -> f64 {
        match kind {
            ComponentKind::Plant => 0.0,
            ComponentKind::Substation => self.substation.moderate.cdf(x),
            ComponentKind::TransmissionTower => p_fail_tower(x),
            ComponentKind::TransmissionLine => line_curve(x, &self.line),
            ComponentKind::DistributionPole => p_fail_pole(x),
            ComponentKind::Conductor => p_fail_conductor(x),
        }
    }
}

/// Draws one uniform number per non-plant component, in index order, and
/// fails the component when its curve probability exceeds the draw.
/// Components with no wind exposure keep their draw but never fail.
/// Returns the number of failed components.
pub fn sample_failures<R: Rng + ?Sized>(
    net: &mut PowerNetwork,
    scenario: &HazardScenario,
    model: &FragilityModel,
    rng: &mut R,
) -> Result<usize> {
    let mut failed = 0;
    for c in &mut net.components {
        if c.kind == ComponentKind::Plant {
            continue;
        }
        let x = wind_at(scenario, c.location)?;
        let r: f64 = rng.random();
        if x <= 0.0 {
            continue;
        }
        // Outer `Some` marks a failure; the inner value is the substation damage level.
        let outcome = if c.kind == ComponentKind::Substation {
            model.substation.exceedance(x).classify(r).map(Some)
        } else if model.probability(c.kind, x) > r {
            Some(None)
        } else {
            None
        };
        if let Some(level) = outcome {
            c.status = Status::Failed;
            c.damage_level = level;
            failed += 1;
        }
    }
    Ok(failed)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RepairRow {
    pub mean_h: f64,
    pub sd_h: f64,
    pub crews: u32,
}

impl RepairRow {
    const fn new(mean_h: f64, sd_h: f64, crews: u32) -> Self {
        Self { mean_h, sd_h, crews }
    }

    /// Whole-hour duration for a standard-normal draw `z`: rounded to the
    /// nearest hour and clamped to at least one hour.
    pub fn hours_for(&self, z: f64) -> u32 {
        (self.mean_h + self.sd_h * z).round().max(1.0) as u32
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RepairModel {
    pub substation_moderate: RepairRow,
    pub substation_severe: RepairRow,
    pub substation_complete: RepairRow,
    pub tower: RepairRow,
    pub line: RepairRow,
    pub pole: RepairRow,
    pub conductor: RepairRow,
}

impl Default for RepairModel {
    fn default() -> Self {
        Self {
            substation_moderate: RepairRow::new(72.0, 36.0, 6),
            substation_severe: RepairRow::new(168.0, 84.0, 14),
            substation_complete: RepairRow::new(720.0, 360.0, 60),
            tower: RepairRow::new(72.0, 36.0, 6),
            line: RepairRow::new(48.0, 24.0, 4),
            pole: RepairRow::new(5.0, 2.5, 1),
            conductor: RepairRow::new(4.0, 2.0, 1),
        }
    }
}

impl RepairModel {
    pub fn row(&self, kind: ComponentKind, damage: Option<DamageLevel>) -> Result<&RepairRow> {
        let missing = || SimError::MissingRepairRow {
            kind: kind.to_string(),
            damage: damage.map_or_else(|| "none".to_string(), |d| d.to_string()),
        };
        match (kind, damage) {
            (ComponentKind::Substation, Some(DamageLevel::Moderate)) => Ok(&self.substation_moderate),
            (ComponentKind::Substation, Some(DamageLevel::Severe)) => Ok(&self.substation_severe),
            (ComponentKind::Substation, Some(DamageLevel::Complete)) => Ok(&self.substation_complete),
            (ComponentKind::TransmissionTower, None) => Ok(&self.tower),
            (ComponentKind::TransmissionLine, None) => Ok(&self.line),
            (ComponentKind::DistributionPole, None) => Ok(&self.pole),
            (ComponentKind::Conductor, None) => Ok(&self.conductor),
            _ => Err(missing()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let rows = [
            self.substation_moderate,
            self.substation_severe,
            self.substation_complete,
            self.tower,
            self.line,
            self.pole,
            self.conductor,
        ];
        if rows.iter().any(|r| !(r.mean_h > 0.0) || !(r.sd_h >= 0.0) || r.crews == 0) {
            return Err(SimError::InvalidParams(
                "repair rows need mean > 0, sd >= 0 and at least one crew".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RepairDraw {
    pub hours: u32,
    pub crews: u32,
}

pub fn sample_repair<R: Rng + ?Sized>(
    component: &PowerComponent,
    model: &RepairModel,
    rng: &mut R,
) -> Result<RepairDraw> {
    let row = model.row(component.kind, component.damage_level)?;
    let z: f64 = rng.sample(StandardNormal);
    Ok(RepairDraw { hours: row.hours_for(z), crews: row.crews })
}
