//! Coupling from roads to power: flooded links keep crews away from
//! components and cut fuel deliveries to plants. The reverse coupling
//! (power feeding traffic lights) is evaluated in [`crate::network`].

use std::collections::VecDeque;

use crate::error::{Result, SimError};
use crate::hazard::{FloodState, HazardScenario};
use crate::network::{PowerComponent, PowerNetwork, RoadNetwork};

/// A crew can reach `component` when its nearest road link is passable, or
/// always when crew access is not modeled.
pub fn component_accessible(component: &PowerComponent, flood: &FloodState, scenario: &HazardScenario) -> bool {
    !scenario.crew_access_dependence || flood.passable(scenario, component.nearest_road_link)
}

/// Whether any route of passable links joins the plant's fuel source to the
/// plant's road node. Reachability covers every alternative route at once.
pub fn fuel_route_available(
    plant: usize,
    power: &PowerNetwork,
    roads: &RoadNetwork,
    flood: &FloodState,
    scenario: &HazardScenario,
) -> bool {
    if !scenario.fuel_dependence {
        return true;
    }
    let Some(slot) = power.plants.iter().position(|&p| p == plant) else {
        return false;
    };
    let Some(source) = power.fuel_source[slot] else {
        return false;
    };
    let target = power.components[plant].road_node;
    if source == target {
        return true;
    }
    let mut seen = vec![false; roads.nodes.len()];
    let mut queue = VecDeque::from([source]);
    seen[source] = true;
    while let Some(u) = queue.pop_front() {
        for &(v, link) in &roads.adjacency[u] {
            if !seen[v] && flood.passable(scenario, link) {
                if v == target {
                    return true;
                }
                seen[v] = true;
                queue.push_back(v);
            }
        }
    }
    false
}

/// A plant generates this hour only if fuel can reach it.
pub fn plant_operational(
    plant: usize,
    power: &PowerNetwork,
    roads: &RoadNetwork,
    flood: &FloodState,
    scenario: &HazardScenario,
) -> bool {
    fuel_route_available(plant, power, roads, flood, scenario)
}

/// Gives every plant without a fuel-source node the road node nearest the
/// scenario's fuel location.
pub fn resolve_fuel_sources(power: &mut PowerNetwork, roads: &RoadNetwork, scenario: &HazardScenario) -> Result<()> {
    for slot in 0..power.plants.len() {
        if power.fuel_source[slot].is_some() {
            continue;
        }
        match scenario.fuel_location.and_then(|p| roads.nearest_node(p)) {
            Some(node) => power.fuel_source[slot] = Some(node),
            None if scenario.fuel_dependence => {
                let id = &power.components[power.plants[slot]].id;
                return Err(SimError::InvalidParams(format!(
                    "plant `{id}` has no fuel source; add an F coupling record or a scenario fuel location"
                )));
            }
            None => {}
        }
    }
    Ok(())
}
