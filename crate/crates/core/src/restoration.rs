//! Crew-constrained repair scheduling.
//!
//! Every hour the scheduler retires finished jobs, then walks the strategy's
//! priority list and starts a job on each failed component that a crew can
//! reach and that the idle crews can cover. Jobs are never preempted.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::fragility::RepairDraw;
use crate::hazard::{FloodState, HazardScenario};
use crate::interdependency::component_accessible;
use crate::network::{GridTopology, PowerNetwork, PoweredSet, RoadNetwork, Status, Tier};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Strategy {
    #[serde(rename = "component")]
    ComponentBased,
    #[serde(rename = "distance")]
    DistanceBased,
    #[serde(rename = "traffic-light")]
    TrafficLightBased,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::ComponentBased, Strategy::DistanceBased, Strategy::TrafficLightBased];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::ComponentBased => "component",
            Strategy::DistanceBased => "distance",
            Strategy::TrafficLightBased => "traffic-light",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL.into_iter().find(|st| st.name() == s).ok_or_else(|| {
            SimError::InvalidParams(format!("unknown strategy `{s}` (expected component, distance or traffic-light)"))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrewPool {
    total: u32,
    available: u32,
}

impl CrewPool {
    pub fn new(total: u32) -> Result<Self> {
        if total == 0 {
            return Err(SimError::InvalidParams("crew pool needs at least one team".into()));
        }
        Ok(Self { total, available: total })
    }

    pub fn total(&self) -> u32 {
        self.total
    }

    pub fn available(&self) -> u32 {
        self.available
    }

    /// Crews a job actually holds. Demands above the pool size take the
    /// whole pool, otherwise the job could never start.
    pub fn demand(&self, required: u32) -> u32 {
        required.min(self.total)
    }

    fn debit(&mut self, n: u32) -> bool {
        if n <= self.available {
            self.available -= n;
            true
        } else {
            false
        }
    }

    fn credit(&mut self, n: u32) {
        self.available += n;
        debug_assert!(self.available <= self.total);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepairJob {
    pub component: usize,
    pub start_hour: u32,
    pub duration: u32,
    pub crews: u32,
}

impl RepairJob {
    pub fn finish_hour(&self) -> u32 {
        self.start_hour + self.duration
    }
}

/// Read-only view of the world that priority rules are computed from.
#[derive(Clone, Copy)]
pub struct PriorityContext<'a> {
    pub net: &'a PowerNetwork,
    pub roads: &'a RoadNetwork,
    pub topology: &'a GridTopology,
    pub powered: &'a PoweredSet,
}

fn tier_rank(tier: Tier) -> u8 {
    match tier {
        Tier::Transmission => 0,
        Tier::Substation => 1,
        Tier::Distribution => 2,
        Tier::Source => 3,
    }
}

/// Failed components lying on the feeding path of some unpowered traffic light.
pub fn light_feeding_set(ctx: &PriorityContext<'_>) -> Vec<bool> {
    let mut on_path = vec![false; ctx.net.len()];
    for light in &ctx.roads.traffic_lights {
        if ctx.powered.contains(light.feeder) {
            continue;
        }
        for c in ctx.topology.path_to_source(light.feeder) {
            if ctx.net.components[c].is_unrepaired() {
                on_path[c] = true;
            }
        }
    }
    on_path
}

/// Orders `failed` for the given strategy. Critical components (transmission,
/// then substations) always precede distribution. The traffic-light strategy
/// splits each of the two tiers into a light-feeding pass and a pass over
/// the rest. Distances that cannot be computed sort last; remaining ties go
/// to the lowest component id.
pub fn priority_order<R: Rng + ?Sized>(
    strategy: Strategy,
    failed: &[usize],
    ctx: &PriorityContext<'_>,
    rng: &mut R,
) -> Vec<usize> {
    let net = ctx.net;
    let topo = ctx.topology;
    let by_id = |a: &usize, b: &usize| net.components[*a].id.cmp(&net.components[*b].id);
    let ascending = |key: &[f64], a: &usize, b: &usize| key[*a].total_cmp(&key[*b]).then_with(|| by_id(a, b));
    let descending = |key: &[u32], a: &usize, b: &usize| key[*b].cmp(&key[*a]).then_with(|| by_id(a, b));

    let mut tiers: [Vec<usize>; 3] = Default::default();
    let mut rest: [Vec<usize>; 3] = Default::default();
    let light_paths = (strategy == Strategy::TrafficLightBased).then(|| light_feeding_set(ctx));
    for &c in failed {
        let rank = tier_rank(net.components[c].kind.tier()) as usize;
        if rank > 2 {
            continue;
        }
        match &light_paths {
            Some(paths) if !paths[c] => rest[rank].push(c),
            _ => tiers[rank].push(c),
        }
    }

    let sort_distance_based = |t: &mut [Vec<usize>; 3], sub_key: &[u32]| {
        t[0].sort_by(|a, b| ascending(&topo.dist_to_plant, a, b));
        t[1].sort_by(|a, b| descending(sub_key, a, b));
        t[2].sort_by(|a, b| ascending(&topo.dist_to_substation, a, b));
    };

    match strategy {
        Strategy::ComponentBased => {
            tiers[0].sort_by(by_id);
            tiers[0].shuffle(rng);
            tiers[1].sort_by(|a, b| descending(&topo.downstream_households, a, b));
            tiers[2].sort_by(by_id);
            tiers[2].shuffle(rng);
        }
        Strategy::DistanceBased => sort_distance_based(&mut tiers, &topo.downstream_households),
        Strategy::TrafficLightBased => {
            sort_distance_based(&mut tiers, &topo.downstream_lights);
            sort_distance_based(&mut rest, &topo.downstream_households);
        }
    }
    let [t, s, d] = tiers;
    let [rt, rs, rd] = rest;
    [t, s, rt, rs, d, rd].into_iter().flatten().collect()
}

/// Scheduler state owned by one replication.
#[derive(Debug, Clone)]
pub struct Scheduler {
    pub strategy: Strategy,
    pub pool: CrewPool,
    pub jobs: Vec<RepairJob>,
}

impl Scheduler {
    pub fn new(strategy: Strategy, pool: CrewPool) -> Self {
        Self { strategy, pool, jobs: Vec::new() }
    }

    pub fn crews_held(&self) -> u32 {
        self.jobs.iter().map(|j| j.crews).sum()
    }

    /// Crews held by active jobs plus idle crews equal the pool size.
    pub fn crews_conserved(&self) -> bool {
        self.crews_held() + self.pool.available() == self.pool.total()
    }

    /// Marks every job due by `hour` repaired and returns its crews.
    pub fn complete_due(&mut self, net: &mut PowerNetwork, hour: u32) -> Vec<usize> {
        let mut done = Vec::new();
        let pool = &mut self.pool;
        self.jobs.retain(|job| {
            if job.finish_hour() <= hour {
                let c = &mut net.components[job.component];
                c.status = Status::Repaired;
                c.repair_hours_remaining = 0.0;
                pool.credit(job.crews);
                done.push(job.component);
                false
            } else {
                net.components[job.component].repair_hours_remaining = (job.finish_hour() - hour) as f64;
                true
            }
        });
        done.sort_unstable();
        done
    }

    /// Starts jobs for the current hour. `draws[c]` is the duration and crew
    /// demand sampled for failed component `c`.
    #[allow(clippy::too_many_arguments)]
    pub fn start_jobs<R: Rng + ?Sized>(
        &mut self,
        hour: u32,
        net: &mut PowerNetwork,
        ctx_roads: &RoadNetwork,
        topology: &GridTopology,
        powered: &PoweredSet,
        flood: &FloodState,
        scenario: &HazardScenario,
        draws: &[Option<RepairDraw>],
        rng: &mut R,
    ) -> Vec<RepairJob> {
        if self.pool.available() == 0 {
            return Vec::new();
        }
        let failed: Vec<usize> = (0..net.len()).filter(|&c| net.components[c].status == Status::Failed).collect();
        if failed.is_empty() {
            return Vec::new();
        }
        let order = {
            let ctx = PriorityContext { net: &*net, roads: ctx_roads, topology, powered };
            priority_order(self.strategy, &failed, &ctx, rng)
        };

        let mut started = Vec::new();
        for c in order {
            if self.pool.available() == 0 {
                break;
            }
            if !component_accessible(&net.components[c], flood, scenario) {
                continue;
            }
            let draw = draws[c].expect("failed components carry a repair draw");
            let crews = self.pool.demand(draw.crews);
            if !self.pool.debit(crews) {
                continue;
            }
            let job = RepairJob { component: c, start_hour: hour, duration: draw.hours, crews };
            let comp = &mut net.components[c];
            comp.status = Status::UnderRepair;
            comp.crews_required = draw.crews;
            comp.repair_hours_remaining = draw.hours as f64;
            self.jobs.push(job);
            started.push(job);
        }
        started
    }
}

/// One scheduling hour: retire finished jobs, then start new ones.
#[allow(clippy::too_many_arguments)]
pub fn schedule_tick<R: Rng + ?Sized>(
    scheduler: &mut Scheduler,
    hour: u32,
    net: &mut PowerNetwork,
    roads: &RoadNetwork,
    topology: &GridTopology,
    powered: &PoweredSet,
    flood: &FloodState,
    scenario: &HazardScenario,
    draws: &[Option<RepairDraw>],
    rng: &mut R,
) -> (Vec<usize>, Vec<RepairJob>) {
    let done = scheduler.complete_due(net, hour);
    let started = scheduler.start_jobs(hour, net, roads, topology, powered, flood, scenario, draws, rng);
    (done, started)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fragility::RepairDraw;
    use crate::network::fixtures::two_branch;
    use crate::network::{powered_set, DamageLevel, Networks};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    struct World {
        nets: Networks,
        topo: GridTopology,
        scenario: HazardScenario,
    }

    fn world(depth: f64) -> World {
        let nets = two_branch();
        let topo = GridTopology::build(&nets.power, &nets.roads, &nets.households);
        let scenario = HazardScenario::uniform(65.0, depth, nets.roads.links.len());
        World { nets, topo, scenario }
    }

    fn fail(w: &mut World, ids: &[&str]) -> Vec<usize> {
        ids.iter()
            .map(|id| {
                let c = w.nets.power.find(id).unwrap();
                w.nets.power.components[c].status = Status::Failed;
                c
            })
            .collect()
    }

    fn order(w: &World, strategy: Strategy, failed: &[usize]) -> Vec<String> {
        let powered = powered_set(&w.nets.power, |_| true);
        let ctx = PriorityContext { net: &w.nets.power, roads: &w.nets.roads, topology: &w.topo, powered: &powered };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        priority_order(strategy, failed, &ctx, &mut rng)
            .into_iter()
            .map(|c| w.nets.power.components[c].id.clone())
            .collect()
    }

    fn draws(w: &World, hours: u32, crews: u32) -> Vec<Option<RepairDraw>> {
        w.nets
            .power
            .components
            .iter()
            .map(|c| (c.status == Status::Failed).then_some(RepairDraw { hours, crews }))
            .collect()
    }

    #[test]
    fn strategy_names_round_trip() {
        for s in Strategy::ALL {
            assert_eq!(s.name().parse::<Strategy>().unwrap(), s);
        }
        let err = "fastest".parse::<Strategy>().unwrap_err().to_string();
        assert!(err.contains("component") && err.contains("traffic-light"));
    }

    #[test]
    fn nearer_pole_first_under_distance() {
        let mut w = world(0.0);
        let failed = fail(&mut w, &["DB", "DA"]);
        assert_eq!(order(&w, Strategy::DistanceBased, &failed), vec!["DA", "DB"]);
    }

    #[test]
    fn critical_tiers_lead_in_every_strategy() {
        let mut w = world(0.0);
        let failed = fail(&mut w, &["DA", "CB", "S", "L"]);
        for s in Strategy::ALL {
            let o = order(&w, s, &failed);
            assert_eq!(&o[..2], &["L", "S"], "{s}");
        }
    }

    #[test]
    fn light_feeding_branch_first() {
        let mut w = world(0.0);
        let failed = fail(&mut w, &["DA", "CB"]);
        assert_eq!(order(&w, Strategy::DistanceBased, &failed), vec!["DA", "CB"]);
        assert_eq!(order(&w, Strategy::TrafficLightBased, &failed), vec!["CB", "DA"]);
        let failed = fail(&mut w, &["DB"]);
        let all: Vec<usize> = failed.iter().copied().chain([w.nets.power.find("DA").unwrap()]).collect();
        assert_eq!(order(&w, Strategy::TrafficLightBased, &all), vec!["DB", "DA"]);
    }

    #[test]
    fn component_strategy_orders_substations_by_load() {
        let mut w = world(0.0);
        let failed = fail(&mut w, &["S", "DA", "DB", "CA"]);
        let a = order(&w, Strategy::ComponentBased, &failed);
        assert_eq!(a[0], "S");
        let mut rest = a[1..].to_vec();
        rest.sort();
        assert_eq!(rest, vec!["CA", "DA", "DB"]);
    }

    #[test]
    fn busy_crews_skip_big_job_and_fill_with_small_ones() {
        let mut w = world(0.0);
        fail(&mut w, &["S", "DA", "DB"]);
        let s = w.nets.power.find("S").unwrap();
        w.nets.power.components[s].damage_level = Some(DamageLevel::Complete);
        let mut d = draws(&w, 5, 1);
        d[s] = Some(RepairDraw { hours: 720, crews: 60 });
        let mut sched = Scheduler::new(Strategy::DistanceBased, CrewPool::new(10).unwrap());
        // One crew already out on an earlier job.
        let ca = w.nets.power.find("CA").unwrap();
        w.nets.power.components[ca].status = Status::UnderRepair;
        assert!(sched.pool.debit(1));
        sched.jobs.push(RepairJob { component: ca, start_hour: 0, duration: 3, crews: 1 });

        let powered = powered_set(&w.nets.power, |_| true);
        let flood = FloodState::new(&w.scenario);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let started =
            sched.start_jobs(1, &mut w.nets.power, &w.nets.roads, &w.topo, &powered, &flood, &w.scenario, &d, &mut rng);
        let ids: Vec<&str> = started.iter().map(|j| w.nets.power.components[j.component].id.as_str()).collect();
        assert_eq!(ids, vec!["DA", "DB"]);
        assert_eq!(w.nets.power.components[s].status, Status::Failed);
        assert!(sched.crews_conserved());
        assert_eq!(sched.pool.available(), 7);

        // Once the pool is idle the substation takes all of it.
        for h in [3, 6] {
            sched.complete_due(&mut w.nets.power, h);
        }
        assert_eq!(sched.pool.available(), 10);
        let started =
            sched.start_jobs(6, &mut w.nets.power, &w.nets.roads, &w.topo, &powered, &flood, &w.scenario, &d, &mut rng);
        assert_eq!(started, vec![RepairJob { component: s, start_hour: 6, duration: 720, crews: 10 }]);
        assert!(sched.crews_conserved());
    }

    #[test]
    fn flooded_roads_block_all_starts() {
        let mut w = world(26.0);
        fail(&mut w, &["DA", "DB"]);
        let d = draws(&w, 5, 1);
        let powered = powered_set(&w.nets.power, |_| true);
        let flood = FloodState::new(&w.scenario);
        let mut sched = Scheduler::new(Strategy::DistanceBased, CrewPool::new(10).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let started =
            sched.start_jobs(0, &mut w.nets.power, &w.nets.roads, &w.topo, &powered, &flood, &w.scenario, &d, &mut rng);
        assert!(started.is_empty());
        assert_eq!(sched.pool.available(), 10);
    }

    #[test]
    fn job_finishes_after_its_duration() {
        let mut w = world(0.0);
        let failed = fail(&mut w, &["DA"]);
        let d = draws(&w, 5, 1);
        let powered = powered_set(&w.nets.power, |_| true);
        let flood = FloodState::new(&w.scenario);
        let mut sched = Scheduler::new(Strategy::DistanceBased, CrewPool::new(2).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (done, started) = schedule_tick(
            &mut sched, 5, &mut w.nets.power, &w.nets.roads, &w.topo, &powered, &flood, &w.scenario, &d, &mut rng,
        );
        assert!(done.is_empty());
        assert_eq!(started.len(), 1);
        assert_eq!(w.nets.power.components[failed[0]].status, Status::UnderRepair);
        assert!(sched.complete_due(&mut w.nets.power, 9).is_empty());
        assert_eq!(w.nets.power.components[failed[0]].repair_hours_remaining, 1.0);
        assert_eq!(sched.complete_due(&mut w.nets.power, 10), failed);
        assert_eq!(w.nets.power.components[failed[0]].status, Status::Repaired);
        assert_eq!(sched.pool.available(), 2);
    }

    #[test]
    fn empty_pool_rejected() {
        assert!(CrewPool::new(0).is_err());
        assert_eq!(CrewPool::new(30).unwrap().demand(60), 30);
    }
}
