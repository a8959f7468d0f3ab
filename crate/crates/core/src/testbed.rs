//! Deterministic synthetic testbed.
//!
//! A square street grid with an arterial every fifth row and column. One
//! plant sits off the south-west corner and hauls fuel from the north-east
//! corner. Each substation has its own transmission chain from the plant.
//! Feeders grow out of the substations along the cheapest streets
//! (arterials cost a third of local streets), giving trunks on arterials
//! and laterals on side streets. Every intersection carries a pole;
//! arterial spans get an extra mid-span pole. Traffic lights go to arterial
//! crossings first and draw from the pole at their intersection.

use std::collections::BinaryHeap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::{DependencySection, FloodSection, ScenarioFile, WindSection, XY};
use crate::error::{Result, SimError};
use crate::network::{parse_networks, Networks, Point};

pub const SPACING_M: f64 = 100.0;
const ARTERIAL_EVERY: usize = 5;
const MAX_SPAN_M: f64 = 800.0;
const RUNOFF_MIN_IN: f64 = 13.0;
const RUNOFF_MAX_IN: f64 = 26.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestbedParams {
    /// Intersections per side.
    pub grid_size: usize,
    pub households: usize,
    pub substations: usize,
    /// Fraction of intersections with a traffic light.
    pub lights_fraction: f64,
    pub seed: u64,
    /// Uniform wind written to the scenario file.
    pub wind_mph: f64,
}

impl Default for TestbedParams {
    fn default() -> Self {
        Self {
            grid_size: 47,
            households: 7657,
            substations: 6,
            lights_fraction: 0.045,
            seed: 1,
            wind_mph: 65.0,
        }
    }
}

/// The generated files, as text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Testbed {
    pub power: String,
    pub roads: String,
    pub couplings: String,
    pub scenario: String,
}

pub const POWER_FILE: &str = "power.csv";
pub const ROADS_FILE: &str = "roads.csv";
pub const COUPLINGS_FILE: &str = "couplings.csv";
pub const SCENARIO_FILE: &str = "scenario.toml";

impl Testbed {
    pub fn networks(&self) -> Result<Networks> {
        parse_networks(&self.power, &self.roads, &self.couplings)
    }

    pub fn scenario_file(&self) -> Result<ScenarioFile> {
        ScenarioFile::parse(&self.scenario)
    }

    pub fn write_to(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| SimError::io(dir, e))?;
        for (name, text) in [
            (POWER_FILE, &self.power),
            (ROADS_FILE, &self.roads),
            (COUPLINGS_FILE, &self.couplings),
            (SCENARIO_FILE, &self.scenario),
        ] {
            let path = dir.join(name);
            fs::write(&path, text).map_err(|e| SimError::io(&path, e))?;
        }
        Ok(())
    }
}

fn is_arterial_line(i: usize) -> bool {
    i.is_multiple_of(ARTERIAL_EVERY)
}

struct Grid {
    n: usize,
}

impl Grid {
    fn node(&self, x: usize, y: usize) -> usize {
        y * self.n + x
    }

    fn xy(&self, v: usize) -> (usize, usize) {
        (v % self.n, v / self.n)
    }

    fn at(&self, v: usize) -> Point {
        let (x, y) = self.xy(v);
        Point::new(x as f64 * SPACING_M, y as f64 * SPACING_M)
    }

    fn node_id(&self, v: usize) -> String {
        let (x, y) = self.xy(v);
        format!("n{x:03}_{y:03}")
    }
}

struct Link {
    a: usize,
    b: usize,
    arterial: bool,
}

fn validate(p: &TestbedParams) -> Result<()> {
    let infeasible = |m: String| Err(SimError::Infeasible(m));
    if p.grid_size < 2 {
        return infeasible("grid_size must be at least 2".into());
    }
    if p.households == 0 || p.substations == 0 {
        return infeasible("households and substations must be positive".into());
    }
    if p.substations > p.grid_size * p.grid_size {
        return infeasible(format!(
            "{} substations do not fit on {} intersections",
            p.substations,
            p.grid_size * p.grid_size
        ));
    }
    if !(0.0..=1.0).contains(&p.lights_fraction) {
        return infeasible("lights_fraction must lie in [0, 1]".into());
    }
    if !(p.wind_mph >= 0.0) {
        return infeasible("wind must be non-negative".into());
    }
    Ok(())
}

/// Spread substations over a coarse layout and snap each to the nearest
/// free arterial crossing (any free intersection when none is left).
fn place_substations(g: &Grid, k: usize) -> Vec<usize> {
    let cols = (k as f64).sqrt().ceil() as usize;
    let rows = k.div_ceil(cols);
    let extent = (g.n - 1) as f64;
    let mut taken = vec![false; g.n * g.n];
    let mut out = Vec::with_capacity(k);
    for i in 0..k {
        let (c, r) = (i % cols, i / cols);
        let target = ((c as f64 + 0.5) / cols as f64 * extent, (r as f64 + 0.5) / rows as f64 * extent);
        let score = |v: usize| {
            let (x, y) = g.xy(v);
            let d = (x as f64 - target.0).hypot(y as f64 - target.1);
            let crossing = is_arterial_line(x) && is_arterial_line(y);
            (!crossing, d, v)
        };
        let best = (0..g.n * g.n)
            .filter(|&v| !taken[v])
            .min_by(|&a, &b| {
                let (ca, da, va) = score(a);
                let (cb, db, vb) = score(b);
                ca.cmp(&cb).then(da.total_cmp(&db)).then(va.cmp(&vb))
            })
            .expect("validated: enough intersections");
        taken[best] = true;
        out.push(best);
    }
    out
}

/// Multi-source Dijkstra over integer street costs; returns each node's
/// parent link towards its feeding substation.
fn feeder_tree(g: &Grid, links: &[Link], adjacency: &[Vec<(usize, usize)>], roots: &[usize]) -> Vec<Option<usize>> {
    let nn = g.n * g.n;
    let mut dist = vec![u64::MAX; nn];
    let mut parent = vec![None; nn];
    let mut heap = BinaryHeap::new();
    for &r in roots {
        dist[r] = 0;
        heap.push(std::cmp::Reverse((0u64, r)));
    }
    while let Some(std::cmp::Reverse((d, u))) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        for &(v, li) in &adjacency[u] {
            let nd = d + if links[li].arterial { 1 } else { 3 };
            if nd < dist[v] {
                dist[v] = nd;
                parent[v] = Some(li);
                heap.push(std::cmp::Reverse((nd, v)));
            }
        }
    }
    parent
}

/// Smooth field in [0, 1] built from a few low-frequency waves.
fn runoff_field(rng: &mut ChaCha8Rng, extent: f64) -> impl Fn(Point) -> f64 {
    let waves: Vec<(f64, f64, f64, f64)> = (0..4)
        .map(|_| {
            let kx = rng.random_range(0.5..2.0) / extent;
            let ky = rng.random_range(0.5..2.0) / extent;
            let phase = rng.random_range(0.0..std::f64::consts::TAU);
            let amp = rng.random_range(0.5..1.0);
            (kx, ky, phase, amp)
        })
        .collect();
    let total: f64 = waves.iter().map(|w| w.3).sum();
    move |p: Point| {
        let s: f64 = waves
            .iter()
            .map(|&(kx, ky, ph, a)| a * (std::f64::consts::TAU * (kx * p.x + ky * p.y) + ph).sin())
            .sum();
        0.5 + 0.5 * s / total
    }
}

pub fn generate_testbed(params: &TestbedParams) -> Result<Testbed> {
    validate(params)?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let g = Grid { n: params.grid_size };
    let nn = g.n * g.n;

    // Roads.
    let mut links = Vec::new();
    for y in 0..g.n {
        for x in 0..g.n {
            if x + 1 < g.n {
                links.push(Link { a: g.node(x, y), b: g.node(x + 1, y), arterial: is_arterial_line(y) });
            }
            if y + 1 < g.n {
                links.push(Link { a: g.node(x, y), b: g.node(x, y + 1), arterial: is_arterial_line(x) });
            }
        }
    }
    let mut adjacency = vec![Vec::new(); nn];
    for (li, l) in links.iter().enumerate() {
        adjacency[l.a].push((l.b, li));
        adjacency[l.b].push((l.a, li));
    }
    let link_id = |li: usize| format!("l{li:05}");
    let mut roads = String::from("# intersections: N,id,x_m,y_m; links: L,id,from,to,length_m\n");
    for v in 0..nn {
        let p = g.at(v);
        writeln!(roads, "N,{},{},{}", g.node_id(v), p.x, p.y).unwrap();
    }
    for (li, l) in links.iter().enumerate() {
        writeln!(roads, "L,{},{},{},{}", link_id(li), g.node_id(l.a), g.node_id(l.b), SPACING_M).unwrap();
    }

    // Power.
    let mut power = String::from("# components: C,id,kind,x_m,y_m; edges: E,id,id\n");
    let mut edges = String::new();
    let mut distribution: Vec<(String, Point)> = Vec::new();
    let mut comp = |id: &str, kind: &str, p: Point| {
        writeln!(power, "C,{id},{kind},{:.1},{:.1}", p.x, p.y).unwrap();
    };
    let mut edge = |a: &str, b: &str| writeln!(edges, "E,{a},{b}").unwrap();

    let plant_at = Point::new(-20.0, -10.0);
    comp("plant", "plant", plant_at);
    let subs = place_substations(&g, params.substations);
    let sub_id = |i: usize| format!("sub{i:02}");
    for (i, &s) in subs.iter().enumerate() {
        let at = g.at(s).midpoint(&Point::new(g.at(s).x - 10.0, g.at(s).y - 10.0));
        comp(&sub_id(i), "substation", at);
        let spans = (plant_at.distance(&at) / MAX_SPAN_M).ceil().max(1.0) as usize;
        let lerp = |t: f64| Point::new(plant_at.x + (at.x - plant_at.x) * t, plant_at.y + (at.y - plant_at.y) * t);
        let mut prev = "plant".to_string();
        for k in 0..spans {
            let line = format!("ln{i:02}_{k:02}");
            comp(&line, "line", lerp((k as f64 + 0.5) / spans as f64));
            edge(&prev, &line);
            prev = line;
            if k + 1 < spans {
                let tower = format!("tw{i:02}_{k:02}");
                comp(&tower, "tower", lerp((k + 1) as f64 / spans as f64));
                edge(&prev, &tower);
                prev = tower;
            }
        }
        edge(&prev, &sub_id(i));
    }

    let pole_id = |v: usize| format!("pole{v:05}");
    let pole_at = |v: usize| Point::new(g.at(v).x + 3.0, g.at(v).y + 2.0);
    let tree = feeder_tree(&g, &links, &adjacency, &subs);
    for (i, &s) in subs.iter().enumerate() {
        let cond = format!("cond{s:05}");
        comp(&cond, "conductor", Point::new(g.at(s).x - 4.0, g.at(s).y + 4.0));
        comp(&pole_id(s), "pole", pole_at(s));
        edge(&sub_id(i), &cond);
        edge(&cond, &pole_id(s));
        distribution.push((cond, Point::new(g.at(s).x - 4.0, g.at(s).y + 4.0)));
        distribution.push((pole_id(s), pole_at(s)));
    }
    for (v, parent) in tree.iter().enumerate() {
        let Some(li) = *parent else { continue };
        let l = &links[li];
        let up = if l.a == v { l.b } else { l.a };
        let (pa, pb) = (g.at(up), g.at(v));
        let horizontal = pa.y == pb.y;
        let along = |t: f64| {
            let p = Point::new(pa.x + (pb.x - pa.x) * t, pa.y + (pb.y - pa.y) * t);
            if horizontal {
                Point::new(p.x, p.y + 4.0)
            } else {
                Point::new(p.x + 4.0, p.y)
            }
        };
        comp(&pole_id(v), "pole", pole_at(v));
        distribution.push((pole_id(v), pole_at(v)));
        if l.arterial {
            let (c1, mid, c2) = (format!("cond{v:05}"), format!("polm{v:05}"), format!("conm{v:05}"));
            comp(&c1, "conductor", along(0.25));
            comp(&mid, "pole", along(0.5));
            comp(&c2, "conductor", along(0.75));
            edge(&pole_id(up), &c1);
            edge(&c1, &mid);
            edge(&mid, &c2);
            edge(&c2, &pole_id(v));
            distribution.push((c1, along(0.25)));
            distribution.push((mid, along(0.5)));
            distribution.push((c2, along(0.75)));
        } else {
            let c = format!("cond{v:05}");
            comp(&c, "conductor", along(0.5));
            edge(&pole_id(up), &c);
            edge(&c, &pole_id(v));
            distribution.push((c, along(0.5)));
        }
    }
    power.push_str(&edges);

    // Households, each hanging off the pole at a random intersection.
    let mut couplings = String::from(
        "# households: H,id,x_m,y_m,component; lights: T,id,node,component; fuel: F,plant,node\n",
    );
    for h in 0..params.households {
        let v = rng.random_range(0..nn);
        let p = g.at(v);
        let (dx, dy) = (rng.random_range(-30.0..30.0), rng.random_range(-30.0..30.0));
        writeln!(couplings, "H,h{h:05},{:.1},{:.1},{}", p.x + dx, p.y + dy, pole_id(v)).unwrap();
    }

    // Traffic lights: arterial crossings, then other arterial intersections, then the rest.
    let n_lights = (params.lights_fraction * nn as f64).round() as usize;
    let mut tiers: [Vec<usize>; 3] = Default::default();
    for v in 0..nn {
        let (x, y) = g.xy(v);
        let rank = match (is_arterial_line(x), is_arterial_line(y)) {
            (true, true) => 0,
            (true, false) | (false, true) => 1,
            _ => 2,
        };
        tiers[rank].push(v);
    }
    let mut light_nodes = Vec::new();
    for mut tier in tiers {
        tier.shuffle(&mut rng);
        light_nodes.extend(tier);
    }
    light_nodes.truncate(n_lights);
    light_nodes.sort_unstable();
    for (i, &v) in light_nodes.iter().enumerate() {
        let at = g.at(v);
        let feeder = distribution
            .iter()
            .min_by(|a, b| a.1.distance(&at).total_cmp(&b.1.distance(&at)).then_with(|| a.0.cmp(&b.0)))
            .map(|d| d.0.as_str())
            .expect("grid has poles");
        writeln!(couplings, "T,tl{i:04},{},{feeder}", g.node_id(v)).unwrap();
    }
    let far_corner = g.node(g.n - 1, g.n - 1);
    writeln!(couplings, "F,plant,{}", g.node_id(far_corner)).unwrap();

    // Scenario.
    let extent = (g.n - 1) as f64 * SPACING_M;
    let field = runoff_field(&mut rng, extent.max(SPACING_M));
    let runoff_in = links
        .iter()
        .enumerate()
        .map(|(li, l)| {
            let s = field(g.at(l.a).midpoint(&g.at(l.b)));
            let depth = RUNOFF_MIN_IN + (RUNOFF_MAX_IN - RUNOFF_MIN_IN) * s;
            (link_id(li), (depth * 100.0).round() / 100.0)
        })
        .collect();
    let far = g.at(far_corner);
    let scenario = ScenarioFile {
        wind: WindSection { uniform_mph: Some(params.wind_mph), cells: Vec::new() },
        flood: FloodSection { runoff_in, ..Default::default() },
        dependencies: DependencySection::default(),
        fuel_source: Some(XY { x_m: far.x, y_m: far.y }),
        ..Default::default()
    };
    let scenario = toml::to_string(&scenario).map_err(|e| SimError::InvalidParams(e.to_string()))?;

    Ok(Testbed { power, roads, couplings, scenario })
}
