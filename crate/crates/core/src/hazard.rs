//! Wind field, post-storm runoff on road links and hourly drainage.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::network::{Point, RoadNetwork};

pub const DEFAULT_DRAINAGE_RATE: f64 = 0.65;
pub const DEFAULT_PASSABILITY_THRESHOLD: f64 = 2.0;

/// Slack for comparing drained depths against the threshold, so that a depth
/// landing on the threshold after `k` steps is not lost to rounding.
const DEPTH_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindCell {
    pub id: String,
    pub min: Point,
    pub max: Point,
    pub mph: f64,
}

impl WindCell {
    fn contains(&self, p: Point) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum WindField {
    Uniform(f64),
    /// Rectangular cells; the first cell containing a point wins.
    Cells(Vec<WindCell>),
}

/// Hazard inputs bound to a road network: runoff is stored per link index.
#[derive(Debug, Clone, PartialEq)]
pub struct HazardScenario {
    pub wind: WindField,
    /// Peak post-storm runoff depth per road link (inches).
    pub initial_runoff: Arc<Vec<f64>>,
    /// Inches per hour.
    pub drainage_rate: f64,
    /// Inches; a link is usable at or below this depth.
    pub passability_threshold: f64,
    pub fuel_dependence: bool,
    pub crew_access_dependence: bool,
    /// Where plants get fuel from, when no coupling record names a node.
    pub fuel_location: Option<Point>,
}

impl HazardScenario {
    /// Uniform wind and uniform runoff over `links` road links.
    pub fn uniform(wind_mph: f64, runoff_in: f64, links: usize) -> Self {
        Self {
            wind: WindField::Uniform(wind_mph),
            initial_runoff: Arc::new(vec![runoff_in; links]),
            drainage_rate: DEFAULT_DRAINAGE_RATE,
            passability_threshold: DEFAULT_PASSABILITY_THRESHOLD,
            fuel_dependence: true,
            crew_access_dependence: true,
            fuel_location: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad_wind = match &self.wind {
            WindField::Uniform(w) => !(*w >= 0.0),
            WindField::Cells(cells) => cells.iter().any(|c| !(c.mph >= 0.0)),
        };
        if bad_wind {
            return Err(SimError::InvalidParams("wind speed must be non-negative".into()));
        }
        if !(self.drainage_rate > 0.0) {
            return Err(SimError::InvalidParams("drainage rate must be positive".into()));
        }
        if !(self.passability_threshold >= 0.0) {
            return Err(SimError::InvalidParams("passability threshold must be non-negative".into()));
        }
        if self.initial_runoff.iter().any(|d| !(*d >= 0.0)) {
            return Err(SimError::InvalidParams("runoff depths must be non-negative".into()));
        }
        Ok(())
    }

    pub fn with_uniform_wind(mut self, mph: f64) -> Self {
        self.wind = WindField::Uniform(mph);
        self
    }

    pub fn with_dependencies(mut self, fuel: bool, crew_access: bool) -> Self {
        self.fuel_dependence = fuel;
        self.crew_access_dependence = crew_access;
        self
    }

    pub fn check_covers(&self, roads: &RoadNetwork) -> Result<()> {
        if self.initial_runoff.len() != roads.links.len() {
            return Err(SimError::InvalidParams(format!(
                "runoff map has {} links, road network has {}",
                self.initial_runoff.len(),
                roads.links.len()
            )));
        }
        Ok(())
    }
}

pub fn wind_at(scenario: &HazardScenario, location: Point) -> Result<f64> {
    match &scenario.wind {
        WindField::Uniform(w) => Ok(*w),
        WindField::Cells(cells) => cells
            .iter()
            .find(|c| c.contains(location))
            .map(|c| c.mph)
            .ok_or(SimError::OutOfExtent { x: location.x, y: location.y }),
    }
}

/// Per-link flood depth at a given hour. Depth is derived from the peak and
/// the elapsed hours, so repeated stepping does not accumulate rounding.
#[derive(Debug, Clone, PartialEq)]
pub struct FloodState {
    initial: Arc<Vec<f64>>,
    pub depth: Vec<f64>,
    pub clock: u32,
}

impl FloodState {
    pub fn new(scenario: &HazardScenario) -> Self {
        Self {
            initial: Arc::clone(&scenario.initial_runoff),
            depth: scenario.initial_runoff.to_vec(),
            clock: 0,
        }
    }

    pub fn drain_step(&self, scenario: &HazardScenario) -> FloodState {
        let mut next = self.clone();
        next.advance(scenario);
        next
    }

    /// In-place form of [`FloodState::drain_step`].
    pub fn advance(&mut self, scenario: &HazardScenario) {
        self.clock += 1;
        let drained = scenario.drainage_rate * self.clock as f64;
        for (d, &peak) in self.depth.iter_mut().zip(self.initial.iter()) {
            *d = (peak - drained).max(0.0);
        }
    }

    pub fn passable(&self, scenario: &HazardScenario, link: usize) -> bool {
        self.depth[link] <= scenario.passability_threshold + DEPTH_EPS
    }

    pub fn passable_count(&self, scenario: &HazardScenario) -> usize {
        (0..self.depth.len()).filter(|&l| self.passable(scenario, l)).count()
    }
}

pub fn link_passable(flood: &FloodState, scenario: &HazardScenario, link: usize) -> Result<bool> {
    if link >= flood.depth.len() {
        return Err(SimError::UnknownLink(link.to_string()));
    }
    Ok(flood.passable(scenario, link))
}

/// First hour at which a link of peak depth `depth` becomes passable.
pub fn first_passable_hour(depth: f64, rate: f64, threshold: f64) -> u32 {
    if depth <= threshold {
        0
    } else {
        ((depth - threshold) / rate - DEPTH_EPS).ceil() as u32
    }
}
