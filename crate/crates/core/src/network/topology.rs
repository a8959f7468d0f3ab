use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

use super::{ComponentKind, Household, PowerNetwork, RoadNetwork};

/// Static structure derived once from the pristine networks: the feeding
/// tree rooted at the plants, downstream load counts, and the road
/// distances the restoration strategies sort by.
#[derive(Debug, Clone)]
pub struct GridTopology {
    /// Upstream neighbor on the breadth-first feeding tree; `None` for plants
    /// and components unreachable from any plant.
    pub parent: Vec<Option<usize>>,
    /// Closest substation on the path towards the plant.
    pub upstream_substation: Vec<Option<usize>>,
    /// Households attached anywhere in the component's subtree.
    pub downstream_households: Vec<u32>,
    /// Traffic lights fed anywhere in the component's subtree.
    pub downstream_lights: Vec<u32>,
    /// Road distance (m) from the component's road node to the nearest plant's road node.
    pub dist_to_plant: Vec<f64>,
    /// Road distance (m) from the component's road node to its upstream
    /// substation's road node; falls back to `dist_to_plant` when no
    /// substation sits upstream.
    pub dist_to_substation: Vec<f64>,
}

impl GridTopology {
    pub fn build(power: &PowerNetwork, roads: &RoadNetwork, households: &[Household]) -> Self {
        let n = power.len();
        let mut parent = vec![None; n];
        let mut seen = vec![false; n];
        let mut order = Vec::with_capacity(n);
        let mut queue = VecDeque::new();
        for &p in &power.plants {
            seen[p] = true;
            queue.push_back(p);
        }
        while let Some(u) = queue.pop_front() {
            order.push(u);
            for &v in &power.adjacency[u] {
                if !seen[v] {
                    seen[v] = true;
                    parent[v] = Some(u);
                    queue.push_back(v);
                }
            }
        }

        let mut upstream_substation = vec![None; n];
        for &u in &order {
            if let Some(p) = parent[u] {
                upstream_substation[u] = if power.components[p].kind == ComponentKind::Substation {
                    Some(p)
                } else {
                    upstream_substation[p]
                };
            }
        }

        let mut downstream_households = vec![0u32; n];
        for h in households {
            downstream_households[h.attachment] += 1;
        }
        let mut downstream_lights = vec![0u32; n];
        for l in &roads.traffic_lights {
            downstream_lights[l.feeder] += 1;
        }
        for &u in order.iter().rev() {
            if let Some(p) = parent[u] {
                downstream_households[p] += downstream_households[u];
                downstream_lights[p] += downstream_lights[u];
            }
        }

        let plant_nodes: Vec<usize> = power.plants.iter().map(|&p| power.components[p].road_node).collect();
        let from_plants = road_distances(roads, &plant_nodes);
        let dist_to_plant: Vec<f64> = power.components.iter().map(|c| from_plants[c.road_node]).collect();

        let mut dist_to_substation = dist_to_plant.clone();
        let mut substations: Vec<usize> = upstream_substation.iter().flatten().copied().collect();
        substations.sort_unstable();
        substations.dedup();
        for s in substations {
            let from_sub = road_distances(roads, &[power.components[s].road_node]);
            for (i, c) in power.components.iter().enumerate() {
                if upstream_substation[i] == Some(s) {
                    dist_to_substation[i] = from_sub[c.road_node];
                }
            }
        }

        Self {
            parent,
            upstream_substation,
            downstream_households,
            downstream_lights,
            dist_to_plant,
            dist_to_substation,
        }
    }

    /// Walks from `component` up to its plant, `component` included.
    pub fn path_to_source(&self, component: usize) -> impl Iterator<Item = usize> + '_ {
        std::iter::successors(Some(component), move |&c| self.parent[c])
    }
}

#[derive(Clone, Copy, PartialEq)]
struct Frontier {
    dist: f64,
    node: usize,
}

impl Eq for Frontier {}

impl Ord for Frontier {
    fn cmp(&self, other: &Self) -> Ordering {
        other.dist.total_cmp(&self.dist).then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Multi-source Dijkstra over link lengths. Unreachable nodes get `+inf`.
pub fn road_distances(roads: &RoadNetwork, sources: &[usize]) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; roads.nodes.len()];
    let mut heap = BinaryHeap::new();
    for &s in sources {
        dist[s] = 0.0;
        heap.push(Frontier { dist: 0.0, node: s });
    }
    while let Some(Frontier { dist: d, node }) = heap.pop() {
        if d > dist[node] {
            continue;
        }
        for &(next, link) in &roads.adjacency[node] {
            let nd = d + roads.links[link].length_m;
            if nd < dist[next] {
                dist[next] = nd;
                heap.push(Frontier { dist: nd, node: next });
            }
        }
    }
    dist
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{Point, PowerComponent, RoadLink, RoadNode};

    #[test]
    fn dijkstra_prefers_shorter_detour() {
        let nodes = (0..4)
            .map(|i| RoadNode { id: format!("n{i}"), location: Point::default() })
            .collect();
        let links = vec![
            RoadLink { id: "a".into(), endpoints: (0, 1), length_m: 10.0 },
            RoadLink { id: "b".into(), endpoints: (0, 2), length_m: 1.0 },
            RoadLink { id: "c".into(), endpoints: (2, 1), length_m: 2.0 },
        ];
        let roads = RoadNetwork::new(nodes, links, vec![]);
        let d = road_distances(&roads, &[0]);
        assert_eq!(d[1], 3.0);
        assert!(d[3].is_infinite());
    }

    #[test]
    fn downstream_counts_and_upstream_substation() {
        use ComponentKind::*;
        let comps = vec![
            PowerComponent::new("plant", Plant, Point::default()),
            PowerComponent::new("line", TransmissionLine, Point::default()),
            PowerComponent::new("sub", Substation, Point::default()),
            PowerComponent::new("c1", Conductor, Point::default()),
            PowerComponent::new("p1", DistributionPole, Point::default()),
        ];
        let power = PowerNetwork::new(comps, vec![(0, 1), (1, 2), (2, 3), (3, 4)]);
        let roads = RoadNetwork::new(
            vec![RoadNode { id: "n".into(), location: Point::default() }],
            vec![],
            vec![],
        );
        let hh: Vec<Household> = (0..3)
            .map(|i| Household { id: format!("h{i}"), location: Point::default(), attachment: 4, powered: true })
            .collect();
        let topo = GridTopology::build(&power, &roads, &hh);
        assert_eq!(topo.downstream_households[2], 3);
        assert_eq!(topo.downstream_households[0], 3);
        assert_eq!(topo.upstream_substation[4], Some(2));
        assert_eq!(topo.upstream_substation[1], None);
        assert_eq!(topo.path_to_source(4).collect::<Vec<_>>(), vec![4, 3, 2, 1, 0]);
    }
}
