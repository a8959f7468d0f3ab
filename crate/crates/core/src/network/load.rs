//! Line-record network files.
//!
//! Every non-blank line that does not start with `#` is one comma-separated
//! record whose first field is a record tag:
//!
//! ```text
//! power file      C,<id>,<kind>,<x_m>,<y_m>        component
//!                 E,<id>,<id>                      grid edge
//! road file       N,<id>,<x_m>,<y_m>               intersection
//!                 L,<id>,<node>,<node>,<length_m>  road link
//! coupling file   H,<id>,<x_m>,<y_m>,<component>   household attachment
//!                 T,<id>,<node>,<component>        traffic light and its feeder
//!                 F,<plant>,<node>                 fuel source node of a plant
//! ```
//!
//! `<kind>` is one of `plant`, `substation`, `tower`, `line`, `pole`,
//! `conductor`. Coordinates and lengths are meters.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use super::{
    powered_set, ComponentKind, Household, Networks, Point, PowerComponent, PowerNetwork, RoadLink, RoadNetwork,
    RoadNode, TrafficLight,
};
use crate::error::{Result, SimError};

struct Record<'a> {
    line: usize,
    fields: Vec<&'a str>,
}

fn records(text: &str) -> impl Iterator<Item = Record<'_>> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            return None;
        }
        Some(Record {
            line: i + 1,
            fields: line.split(',').map(str::trim).collect(),
        })
    })
}

struct Ctx<'p> {
    path: &'p Path,
}

impl Ctx<'_> {
    fn err(&self, rec: &Record<'_>, msg: impl Into<String>) -> SimError {
        SimError::parse(self.path, rec.line, msg)
    }

    fn arity(&self, rec: &Record<'_>, n: usize) -> Result<()> {
        if rec.fields.len() != n {
            return Err(self.err(
                rec,
                format!("`{}` record expects {} fields, found {}", rec.fields[0], n, rec.fields.len()),
            ));
        }
        Ok(())
    }

    fn num(&self, rec: &Record<'_>, idx: usize, what: &str) -> Result<f64> {
        let raw = rec.fields[idx];
        match raw.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(self.err(rec, format!("invalid {what} `{raw}`"))),
        }
    }

    fn id<'a>(&self, rec: &Record<'a>, idx: usize) -> Result<&'a str> {
        let id = rec.fields[idx];
        if id.is_empty() {
            return Err(self.err(rec, "empty id"));
        }
        Ok(id)
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| SimError::io(path, e))
}

/// Reads and cross-validates the three network files.
pub fn load_networks(power_file: &Path, road_file: &Path, coupling_file: &Path) -> Result<Networks> {
    let power = read(power_file)?;
    let roads = read(road_file)?;
    let coupling = read(coupling_file)?;
    parse_networks_at(&power, power_file, &roads, road_file, &coupling, coupling_file)
}

/// In-memory variant of [`load_networks`].
pub fn parse_networks(power: &str, roads: &str, coupling: &str) -> Result<Networks> {
    parse_networks_at(
        power,
        Path::new("<power>"),
        roads,
        Path::new("<roads>"),
        coupling,
        Path::new("<coupling>"),
    )
}

fn parse_networks_at(
    power_text: &str,
    power_path: &Path,
    road_text: &str,
    road_path: &Path,
    coupling_text: &str,
    coupling_path: &Path,
) -> Result<Networks> {
    let mut roads = parse_roads(road_text, road_path)?;
    let mut power = parse_power(power_text, power_path)?;
    if roads.links.is_empty() {
        return Err(SimError::InvalidParams("road network has no links".into()));
    }
    if power.plants.is_empty() {
        return Err(SimError::InvalidParams("power network has no plant".into()));
    }

    for c in &mut power.components {
        let link = roads.nearest_link(c.location).expect("links checked non-empty");
        c.nearest_road_link = link;
        c.road_node = roads.closer_endpoint(link, c.location);
    }

    let ctx = Ctx { path: coupling_path };
    let mut households = Vec::new();
    let mut lights = Vec::new();
    let mut seen_h = HashSet::new();
    let mut seen_t = HashSet::new();
    for rec in records(coupling_text) {
        match rec.fields[0] {
            "H" => {
                ctx.arity(&rec, 5)?;
                let id = ctx.id(&rec, 1)?;
                let location = Point::new(ctx.num(&rec, 2, "x")?, ctx.num(&rec, 3, "y")?);
                let attachment = component_ref(&power, rec.fields[4], "household", id)?;
                if !seen_h.insert(id) {
                    return Err(SimError::DuplicateId { kind: "household", id: id.into() });
                }
                households.push(Household { id: id.into(), location, attachment, powered: true });
            }
            "T" => {
                ctx.arity(&rec, 4)?;
                let id = ctx.id(&rec, 1)?;
                let intersection = node_ref(&roads, rec.fields[2], "traffic light", id)?;
                let feeder = component_ref(&power, rec.fields[3], "traffic light", id)?;
                if !seen_t.insert(id) {
                    return Err(SimError::DuplicateId { kind: "traffic light", id: id.into() });
                }
                lights.push(TrafficLight { id: id.into(), intersection, feeder, powered: true });
            }
            "F" => {
                ctx.arity(&rec, 3)?;
                let plant_id = ctx.id(&rec, 1)?;
                let plant = component_ref(&power, plant_id, "fuel source", plant_id)?;
                let slot = power
                    .plants
                    .iter()
                    .position(|&p| p == plant)
                    .ok_or_else(|| ctx.err(&rec, format!("`{plant_id}` is not a plant")))?;
                power.fuel_source[slot] = Some(node_ref(&roads, rec.fields[2], "fuel source", plant_id)?);
            }
            other => return Err(ctx.err(&rec, format!("unknown coupling record tag `{other}`"))),
        }
    }
    roads.traffic_lights = lights;

    let reach = powered_set(&power, |_| true);
    if let Some(h) = households.iter().find(|h| !reach.contains(h.attachment)) {
        return Err(SimError::DisconnectedGrid { id: h.id.clone() });
    }
    if let Some(l) = roads.traffic_lights.iter().find(|l| !reach.contains(l.feeder)) {
        return Err(SimError::DisconnectedGrid { id: l.id.clone() });
    }

    Ok(Networks { power, roads, households })
}

fn component_ref(power: &PowerNetwork, id: &str, owner_kind: &str, owner: &str) -> Result<usize> {
    power.find(id).ok_or_else(|| SimError::DanglingReference {
        kind: "power component",
        id: id.into(),
        context: format!("referenced by {owner_kind} `{owner}`"),
    })
}

fn node_ref(roads: &RoadNetwork, id: &str, owner_kind: &str, owner: &str) -> Result<usize> {
    roads.find_node(id).ok_or_else(|| SimError::DanglingReference {
        kind: "road node",
        id: id.into(),
        context: format!("referenced by {owner_kind} `{owner}`"),
    })
}

fn parse_power(text: &str, path: &Path) -> Result<PowerNetwork> {
    let ctx = Ctx { path };
    let mut components: Vec<PowerComponent> = Vec::new();
    let mut raw_edges = Vec::new();
    let mut seen = HashSet::new();
    for rec in records(text) {
        match rec.fields[0] {
            "C" => {
                ctx.arity(&rec, 5)?;
                let id = ctx.id(&rec, 1)?;
                let kind = ComponentKind::from_keyword(rec.fields[2])
                    .ok_or_else(|| ctx.err(&rec, format!("unknown component kind `{}`", rec.fields[2])))?;
                let location = Point::new(ctx.num(&rec, 3, "x")?, ctx.num(&rec, 4, "y")?);
                if !seen.insert(id.to_string()) {
                    return Err(SimError::DuplicateId { kind: "power component", id: id.into() });
                }
                components.push(PowerComponent::new(id, kind, location));
            }
            "E" => {
                ctx.arity(&rec, 3)?;
                raw_edges.push((ctx.id(&rec, 1)?.to_string(), ctx.id(&rec, 2)?.to_string()));
            }
            other => return Err(ctx.err(&rec, format!("unknown power record tag `{other}`"))),
        }
    }
    let net = PowerNetwork::new(components, Vec::new());
    let mut edges = Vec::with_capacity(raw_edges.len());
    for (a, b) in &raw_edges {
        let ia = component_ref(&net, a, "edge to", b)?;
        let ib = component_ref(&net, b, "edge to", a)?;
        edges.push((ia, ib));
    }
    Ok(PowerNetwork::new(net.components, edges))
}

fn parse_roads(text: &str, path: &Path) -> Result<RoadNetwork> {
    let ctx = Ctx { path };
    let mut nodes = Vec::new();
    let mut raw_links = Vec::new();
    let mut seen_nodes = HashSet::new();
    let mut seen_links = HashSet::new();
    for rec in records(text) {
        match rec.fields[0] {
            "N" => {
                ctx.arity(&rec, 4)?;
                let id = ctx.id(&rec, 1)?;
                if !seen_nodes.insert(id) {
                    return Err(SimError::DuplicateId { kind: "road node", id: id.into() });
                }
                let location = Point::new(ctx.num(&rec, 2, "x")?, ctx.num(&rec, 3, "y")?);
                nodes.push(RoadNode { id: id.into(), location });
            }
            "L" => {
                ctx.arity(&rec, 5)?;
                let id = ctx.id(&rec, 1)?;
                if !seen_links.insert(id) {
                    return Err(SimError::DuplicateId { kind: "road link", id: id.into() });
                }
                let length = ctx.num(&rec, 4, "length")?;
                if length <= 0.0 {
                    return Err(ctx.err(&rec, format!("link `{id}` has non-positive length {length}")));
                }
                raw_links.push((id, rec.fields[2], rec.fields[3], length));
            }
            other => return Err(ctx.err(&rec, format!("unknown road record tag `{other}`"))),
        }
    }
    let partial = RoadNetwork::new(nodes, Vec::new(), Vec::new());
    let links = raw_links
        .iter()
        .map(|&(id, a, b, length_m)| {
            let endpoints = (
                node_ref(&partial, a, "road link", id)?,
                node_ref(&partial, b, "road link", id)?,
            );
            Ok(RoadLink { id: id.into(), endpoints, length_m })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RoadNetwork::new(partial.nodes, links, Vec::new()))
}

#[cfg(test)]
mod tests {
    use super::*;

    const POWER: &str = "\
# toy grid
C,P1,plant,0,0
C,D1,pole,50,0
E,P1,D1
";
    const ROADS: &str = "\
N,n1,0,10
N,n2,100,10
L,l1,n1,n2,100
";
    const COUPLING: &str = "\
H,h1,60,0,D1
F,P1,n2
";

    #[test]
    fn minimal_network_loads_powered() {
        let nets = parse_networks(POWER, ROADS, COUPLING).unwrap();
        assert_eq!(nets.households.len(), 1);
        assert!(nets.households[0].powered);
        assert_eq!(nets.power.fuel_source, vec![Some(1)]);
        let d1 = &nets.power.components[1];
        assert_eq!(d1.nearest_road_link, 0);
        // D1 at x=50 is equidistant from both ends; first endpoint wins.
        assert_eq!(d1.road_node, 0);
        assert_eq!(nets.power.components[0].road_node, 0);
    }

    #[test]
    fn missing_component_is_named() {
        let err = parse_networks(POWER, ROADS, "H,h1,0,0,X9\n").unwrap_err();
        assert!(matches!(&err, SimError::DanglingReference { id, .. } if id == "X9"), "{err}");
        assert!(err.to_string().contains("X9"));
    }

    #[test]
    fn parse_error_carries_line() {
        let err = parse_networks("C,P1,plant,0,0\nC,P2,reactor,1,1\n", ROADS, "").unwrap_err();
        match err {
            SimError::Parse { line, message, .. } => {
                assert_eq!(line, 2);
                assert!(message.contains("reactor"));
            }
            other => panic!("unexpected {other}"),
        }
        let err = parse_networks(POWER, "N,n1,0,0\nN,n2,1,0\nL,l1,n1,n2,abc\n", "").unwrap_err();
        assert!(matches!(err, SimError::Parse { line: 3, .. }));
    }

    #[test]
    fn disconnected_household_is_rejected() {
        let power = "C,P1,plant,0,0\nC,D1,pole,50,0\nC,D2,pole,90,0\nE,P1,D1\n";
        let err = parse_networks(power, ROADS, "H,h1,0,0,D2\n").unwrap_err();
        assert!(matches!(err, SimError::DisconnectedGrid { ref id } if id == "h1"));
    }

    #[test]
    fn dangling_edge_and_link_endpoints() {
        let err = parse_networks("C,P1,plant,0,0\nE,P1,Q\n", ROADS, "").unwrap_err();
        assert!(matches!(err, SimError::DanglingReference { ref id, .. } if id == "Q"));
        let err = parse_networks(POWER, "N,n1,0,0\nL,l1,n1,zz,5\n", "").unwrap_err();
        assert!(matches!(err, SimError::DanglingReference { ref id, .. } if id == "zz"));
    }

    #[test]
    fn duplicate_ids_rejected() {
        let err = parse_networks("C,P1,plant,0,0\nC,P1,pole,1,1\n", ROADS, "").unwrap_err();
        assert!(matches!(err, SimError::DuplicateId { .. }));
    }

    #[test]
    fn missing_file_reports_path() {
        let err = load_networks(Path::new("/nonexistent/p.csv"), Path::new("r"), Path::new("c")).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/p.csv"));
    }
}
