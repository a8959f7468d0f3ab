//! Power and road network domain types, their coupling maps and the
//! connectivity computation that decides which components are energized.
//!
//! Both networks are immutable after loading except for component status,
//! which a replication mutates on its own copy. Components, road nodes and
//! links are addressed by dense indices (`usize`) into their owning vectors;
//! the string ids from the input files are kept for reporting.

#[cfg(test)]
pub(crate) mod fixtures;
mod load;
mod topology;

use std::collections::{HashMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

pub use load::{load_networks, parse_networks};
pub use topology::{road_distances, GridTopology};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn midpoint(&self, other: &Point) -> Point {
        Point::new(0.5 * (self.x + other.x), 0.5 * (self.y + other.y))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComponentKind {
    Plant,
    Substation,
    TransmissionTower,
    TransmissionLine,
    DistributionPole,
    Conductor,
}

/// Restoration tier of a component kind. Transmission and substations form
/// the critical tier that every strategy repairs before distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Tier {
    Source,
    Transmission,
    Substation,
    Distribution,
}

impl ComponentKind {
    pub const ALL: [ComponentKind; 6] = [
        ComponentKind::Plant,
        ComponentKind::Substation,
        ComponentKind::TransmissionTower,
        ComponentKind::TransmissionLine,
        ComponentKind::DistributionPole,
        ComponentKind::Conductor,
    ];

    pub fn tier(self) -> Tier {
        match self {
            ComponentKind::Plant => Tier::Source,
            ComponentKind::TransmissionTower | ComponentKind::TransmissionLine => Tier::Transmission,
            ComponentKind::Substation => Tier::Substation,
            ComponentKind::DistributionPole | ComponentKind::Conductor => Tier::Distribution,
        }
    }

    pub fn is_critical(self) -> bool {
        matches!(self.tier(), Tier::Transmission | Tier::Substation)
    }

    /// Keyword used in the power network file.
    pub fn keyword(self) -> &'static str {
        match self {
            ComponentKind::Plant => "plant",
            ComponentKind::Substation => "substation",
            ComponentKind::TransmissionTower => "tower",
            ComponentKind::TransmissionLine => "line",
            ComponentKind::DistributionPole => "pole",
            ComponentKind::Conductor => "conductor",
        }
    }

    pub fn from_keyword(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.keyword() == s)
    }
}

impl fmt::Display for ComponentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Operational,
    Failed,
    UnderRepair,
    Repaired,
}

impl Status {
    /// Repaired components conduct exactly like untouched ones.
    pub fn conducts(self) -> bool {
        matches!(self, Status::Operational | Status::Repaired)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DamageLevel {
    Moderate,
    Severe,
    Complete,
}

impl DamageLevel {
    pub const ALL: [DamageLevel; 3] = [DamageLevel::Moderate, DamageLevel::Severe, DamageLevel::Complete];
}

impl fmt::Display for DamageLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            DamageLevel::Moderate => "moderate",
            DamageLevel::Severe => "severe",
            DamageLevel::Complete => "complete",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerComponent {
    pub id: String,
    pub kind: ComponentKind,
    pub location: Point,
    pub status: Status,
    /// Only set on failed substations.
    pub damage_level: Option<DamageLevel>,
    /// Index into [`RoadNetwork::links`].
    pub nearest_road_link: usize,
    /// Road node a crew drives to; the endpoint of `nearest_road_link`
    /// closer to the component.
    pub road_node: usize,
    pub crews_required: u32,
    pub repair_hours_remaining: f64,
}

impl PowerComponent {
    pub fn new(id: impl Into<String>, kind: ComponentKind, location: Point) -> Self {
        Self {
            id: id.into(),
            kind,
            location,
            status: Status::Operational,
            damage_level: None,
            nearest_road_link: 0,
            road_node: 0,
            crews_required: 1,
            repair_hours_remaining: 0.0,
        }
    }

    pub fn is_unrepaired(&self) -> bool {
        matches!(self.status, Status::Failed | Status::UnderRepair)
    }
}

#[derive(Debug, Clone, Default)]
pub struct PowerNetwork {
    pub components: Vec<PowerComponent>,
    pub edges: Vec<(usize, usize)>,
    pub adjacency: Vec<Vec<usize>>,
    pub plants: Vec<usize>,
    /// Road node fuel is hauled from, per plant (same order as `plants`).
    /// `None` until a coupling record or the scenario assigns one.
    pub fuel_source: Vec<Option<usize>>,
    index: HashMap<String, usize>,
}

impl PowerNetwork {
    pub fn new(components: Vec<PowerComponent>, edges: Vec<(usize, usize)>) -> Self {
        let mut adjacency = vec![Vec::new(); components.len()];
        for &(a, b) in &edges {
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
        for adj in &mut adjacency {
            adj.sort_unstable();
            adj.dedup();
        }
        let plants: Vec<usize> = components
            .iter()
            .enumerate()
            .filter(|(_, c)| c.kind == ComponentKind::Plant)
            .map(|(i, _)| i)
            .collect();
        let index = components.iter().enumerate().map(|(i, c)| (c.id.clone(), i)).collect();
        Self {
            fuel_source: vec![None; plants.len()],
            components,
            edges,
            adjacency,
            plants,
            index,
        }
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn find(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn failed_count(&self) -> usize {
        self.components.iter().filter(|c| c.is_unrepaired()).count()
    }

    pub fn all_restored(&self) -> bool {
        self.components.iter().all(|c| !c.is_unrepaired())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoadNode {
    pub id: String,
    pub location: Point,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoadLink {
    pub id: String,
    /// Indices into [`RoadNetwork::nodes`].
    pub endpoints: (usize, usize),
    pub length_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrafficLight {
    pub id: String,
    pub intersection: usize,
    /// Power component the light draws from.
    pub feeder: usize,
    pub powered: bool,
}

#[derive(Debug, Clone, Default)]
pub struct RoadNetwork {
    pub nodes: Vec<RoadNode>,
    pub links: Vec<RoadLink>,
    pub traffic_lights: Vec<TrafficLight>,
    /// Per node: `(neighbor node, link index)`.
    pub adjacency: Vec<Vec<(usize, usize)>>,
    node_index: HashMap<String, usize>,
    link_index: HashMap<String, usize>,
}

impl RoadNetwork {
    pub fn new(nodes: Vec<RoadNode>, links: Vec<RoadLink>, traffic_lights: Vec<TrafficLight>) -> Self {
        let mut adjacency = vec![Vec::new(); nodes.len()];
        for (li, link) in links.iter().enumerate() {
            let (a, b) = link.endpoints;
            adjacency[a].push((b, li));
            adjacency[b].push((a, li));
        }
        let node_index = nodes.iter().enumerate().map(|(i, n)| (n.id.clone(), i)).collect();
        let link_index = links.iter().enumerate().map(|(i, l)| (l.id.clone(), i)).collect();
        Self {
            nodes,
            links,
            traffic_lights,
            adjacency,
            node_index,
            link_index,
        }
    }

    pub fn find_node(&self, id: &str) -> Option<usize> {
        self.node_index.get(id).copied()
    }

    pub fn find_link(&self, id: &str) -> Option<usize> {
        self.link_index.get(id).copied()
    }

    pub fn link_midpoint(&self, link: usize) -> Point {
        let (a, b) = self.links[link].endpoints;
        self.nodes[a].location.midpoint(&self.nodes[b].location)
    }

    /// Nearest link by Euclidean distance from `p` to link midpoints; ties go
    /// to the lexicographically lowest link id.
    pub fn nearest_link(&self, p: Point) -> Option<usize> {
        let mut best: Option<(f64, usize)> = None;
        for li in 0..self.links.len() {
            let d = self.link_midpoint(li).distance(&p);
            best = match best {
                None => Some((d, li)),
                Some((bd, bi)) => {
                    if d < bd || (d == bd && self.links[li].id < self.links[bi].id) {
                        Some((d, li))
                    } else {
                        Some((bd, bi))
                    }
                }
            };
        }
        best.map(|(_, li)| li)
    }

    /// Nearest intersection to `p`; ties go to the lowest node index.
    pub fn nearest_node(&self, p: Point) -> Option<usize> {
        self.nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.location.distance(&p), i))
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
            .map(|(_, i)| i)
    }

    /// Endpoint of `link` closer to `p` (first endpoint on ties).
    pub fn closer_endpoint(&self, link: usize, p: Point) -> usize {
        let (a, b) = self.links[link].endpoints;
        if self.nodes[b].location.distance(&p) < self.nodes[a].location.distance(&p) {
            b
        } else {
            a
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Household {
    pub id: String,
    pub location: Point,
    /// Distribution component index the household hangs off.
    pub attachment: usize,
    pub powered: bool,
}

/// Everything `load_networks` produces.
#[derive(Debug, Clone)]
pub struct Networks {
    pub power: PowerNetwork,
    pub roads: RoadNetwork,
    pub households: Vec<Household>,
}

/// Set of energized components, stored as a membership bitmap over
/// component indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PoweredSet {
    members: Vec<bool>,
}

impl PoweredSet {
    pub fn contains(&self, component: usize) -> bool {
        self.members.get(component).copied().unwrap_or(false)
    }

    pub fn len(&self) -> usize {
        self.members.iter().filter(|&&m| m).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.members.iter().any(|&m| m)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.members.iter().enumerate().filter(|(_, &m)| m).map(|(i, _)| i)
    }

    pub fn is_subset(&self, other: &PoweredSet) -> bool {
        self.members.iter().zip(&other.members).all(|(&a, &b)| !a || b)
    }
}

/// Components reachable from an energized plant through conducting
/// components. A plant is a source only when `plant_fueled` holds for it;
/// an unfueled plant blocks propagation like a failed component.
pub fn powered_set(net: &PowerNetwork, plant_fueled: impl Fn(usize) -> bool) -> PoweredSet {
    let n = net.components.len();
    let live = |i: usize| {
        let c = &net.components[i];
        c.status.conducts() && (c.kind != ComponentKind::Plant || plant_fueled(i))
    };
    let mut members = vec![false; n];
    let mut queue = VecDeque::new();
    for &p in &net.plants {
        if live(p) && !members[p] {
            members[p] = true;
            queue.push_back(p);
        }
    }
    while let Some(u) = queue.pop_front() {
        for &v in &net.adjacency[u] {
            if !members[v] && live(v) {
                members[v] = true;
                queue.push_back(v);
            }
        }
    }
    PoweredSet { members }
}

/// Updates each household's `powered` flag and returns the powered
/// fraction. An empty population counts as fully served.
pub fn powered_households(households: &mut [Household], powered: &PoweredSet) -> f64 {
    if households.is_empty() {
        return 1.0;
    }
    let mut on = 0usize;
    for h in households.iter_mut() {
        h.powered = powered.contains(h.attachment);
        on += h.powered as usize;
    }
    on as f64 / households.len() as f64
}

pub fn powered_traffic_lights(roads: &mut RoadNetwork, powered: &PoweredSet) -> f64 {
    if roads.traffic_lights.is_empty() {
        return 1.0;
    }
    let mut on = 0usize;
    for light in roads.traffic_lights.iter_mut() {
        light.powered = powered.contains(light.feeder);
        on += light.powered as usize;
    }
    on as f64 / roads.traffic_lights.len() as f64
}
