//! Scenario files (TOML).
//!
//! ```toml
//! [wind]
//! uniform_mph = 115.0
//!
//! [flood]
//! uniform_runoff_in = 13.0        # or a [flood.runoff_in] table keyed by link id
//! drainage_rate_in_per_h = 0.65
//! passability_threshold_in = 2.0
//!
//! [dependencies]
//! fuel = true
//! crew_access = true
//!
//! [fuel_source]
//! x_m = 4600.0
//! y_m = 4600.0
//!
//! [fragility.substation]
//! moderate_median_mph = 140.0
//! severe_median_mph = 170.0
//! complete_median_mph = 200.0
//! sigma = 0.2
//!
//! [fragility.line]
//! critical_mph = 67.1
//! collapse_mph = 134.2
//!
//! [repair.pole]
//! mean_h = 5.0
//! sd_h = 2.5
//! crews = 1
//! ```

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::fragility::{FragilityModel, LineFragilityParams, Lognormal, RepairModel, RepairRow};
use crate::hazard::{HazardScenario, WindCell, WindField, DEFAULT_DRAINAGE_RATE, DEFAULT_PASSABILITY_THRESHOLD};
use crate::network::{Point, RoadNetwork};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default)]
    pub wind: WindSection,
    #[serde(default)]
    pub flood: FloodSection,
    #[serde(default)]
    pub dependencies: DependencySection,
    pub fuel_source: Option<XY>,
    #[serde(default)]
    pub fragility: FragilitySection,
    #[serde(default)]
    pub repair: RepairSection,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindSection {
    pub uniform_mph: Option<f64>,
    #[serde(default)]
    pub cells: Vec<WindCellEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindCellEntry {
    pub id: String,
    pub min_x_m: f64,
    pub min_y_m: f64,
    pub max_x_m: f64,
    pub max_y_m: f64,
    pub mph: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FloodSection {
    pub uniform_runoff_in: Option<f64>,
    #[serde(default)]
    pub runoff_in: BTreeMap<String, f64>,
    #[serde(default = "default_rate")]
    pub drainage_rate_in_per_h: f64,
    #[serde(default = "default_threshold")]
    pub passability_threshold_in: f64,
}

impl Default for FloodSection {
    fn default() -> Self {
        Self {
            uniform_runoff_in: None,
            runoff_in: BTreeMap::new(),
            drainage_rate_in_per_h: DEFAULT_DRAINAGE_RATE,
            passability_threshold_in: DEFAULT_PASSABILITY_THRESHOLD,
        }
    }
}

fn default_rate() -> f64 {
    DEFAULT_DRAINAGE_RATE
}

fn default_threshold() -> f64 {
    DEFAULT_PASSABILITY_THRESHOLD
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DependencySection {
    #[serde(default = "yes")]
    pub fuel: bool,
    #[serde(default = "yes")]
    pub crew_access: bool,
}

impl Default for DependencySection {
    fn default() -> Self {
        Self { fuel: true, crew_access: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct XY {
    pub x_m: f64,
    pub y_m: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FragilitySection {
    pub substation: Option<SubstationEntry>,
    pub line: Option<LineEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubstationEntry {
    pub moderate_median_mph: f64,
    pub severe_median_mph: f64,
    pub complete_median_mph: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineEntry {
    pub critical_mph: f64,
    pub collapse_mph: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RepairSection {
    pub substation_moderate: Option<RepairRow>,
    pub substation_severe: Option<RepairRow>,
    pub substation_complete: Option<RepairRow>,
    pub tower: Option<RepairRow>,
    pub line: Option<RepairRow>,
    pub pole: Option<RepairRow>,
    pub conductor: Option<RepairRow>,
}

impl ScenarioFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| SimError::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            SimError::Parse { line, message, .. } => SimError::parse(path, line, message),
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let line = e.span().map_or(0, |s| text[..s.start].lines().count().max(1));
            SimError::parse(Path::new("<scenario>"), line, e.message().to_string())
        })
    }

    /// Binds the file to a road network. Without a runoff entry links start dry.
    pub fn scenario(&self, roads: &RoadNetwork) -> Result<HazardScenario> {
        let wind = match (self.wind.uniform_mph, self.wind.cells.is_empty()) {
            (Some(_), false) => {
                return Err(SimError::InvalidParams("give either wind.uniform_mph or wind.cells, not both".into()))
            }
            (Some(w), true) => WindField::Uniform(w),
            (None, false) => WindField::Cells(
                self.wind
                    .cells
                    .iter()
                    .map(|c| WindCell {
                        id: c.id.clone(),
                        min: Point::new(c.min_x_m, c.min_y_m),
                        max: Point::new(c.max_x_m, c.max_y_m),
                        mph: c.mph,
                    })
                    .collect(),
            ),
            (None, true) => WindField::Uniform(0.0),
        };

        let mut runoff = vec![self.flood.uniform_runoff_in.unwrap_or(0.0); roads.links.len()];
        for (id, depth) in &self.flood.runoff_in {
            let li = roads.find_link(id).ok_or_else(|| SimError::UnknownLink(id.clone()))?;
            runoff[li] = *depth;
        }

        let scenario = HazardScenario {
            wind,
            initial_runoff: Arc::new(runoff),
            drainage_rate: self.flood.drainage_rate_in_per_h,
            passability_threshold: self.flood.passability_threshold_in,
            fuel_dependence: self.dependencies.fuel,
            crew_access_dependence: self.dependencies.crew_access,
            fuel_location: self.fuel_source.map(|p| Point::new(p.x_m, p.y_m)),
        };
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn fragility(&self) -> Result<FragilityModel> {
        let mut model = FragilityModel::default();
        if let Some(s) = self.fragility.substation {
            model.substation.moderate = Lognormal::from_median(s.moderate_median_mph, s.sigma);
            model.substation.severe = Lognormal::from_median(s.severe_median_mph, s.sigma);
            model.substation.complete = Lognormal::from_median(s.complete_median_mph, s.sigma);
        }
        if let Some(l) = self.fragility.line {
            model.line = LineFragilityParams { w_critical: l.critical_mph, w_collapse: l.collapse_mph };
        }
        model.validate()?;
        Ok(model)
    }

    pub fn repair(&self) -> Result<RepairModel> {
        let mut m = RepairModel::default();
        let r = &self.repair;
        let slots = [
            (r.substation_moderate, &mut m.substation_moderate),
            (r.substation_severe, &mut m.substation_severe),
            (r.substation_complete, &mut m.substation_complete),
            (r.tower, &mut m.tower),
            (r.line, &mut m.line),
            (r.pole, &mut m.pole),
            (r.conductor, &mut m.conductor),
        ];
        for (over, slot) in slots {
            if let Some(row) = over {
                *slot = row;
            }
        }
        m.validate()?;
        Ok(m)
    }
}
