//! Hour-stepped simulation of one storm replication.
//!
//! Hour 0 samples damage and opens the flood at its peak. Each later hour
//! drains the flood, retires finished repairs, re-evaluates fuel delivery and
//! power flow, records both quality curves, then lets idle crews start new
//! work. A replication ends at the first hour where everything is repaired
//! and all households and traffic lights are served.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::fragility::{sample_failures, sample_repair, FragilityModel, RepairDraw, RepairModel};
use crate::hazard::{FloodState, HazardScenario};
use crate::interdependency::{plant_operational, resolve_fuel_sources};
use crate::metrics::QualitySeries;
use crate::network::{
    powered_households, powered_set, powered_traffic_lights, DamageLevel, GridTopology, Networks, PowerNetwork,
    Status,
};
use crate::restoration::{CrewPool, RepairJob, Scheduler, Strategy};

pub const DEFAULT_HARD_CAP_HOURS: u32 = 10_000;

const STREAM_FAILURES: u64 = 0;
const STREAM_REPAIRS: u64 = 1;
const STREAM_STRATEGY: u64 = 2;

/// Validated inputs shared by every replication.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub networks: Networks,
    pub topology: GridTopology,
    pub scenario: HazardScenario,
    pub fragility: FragilityModel,
    pub repair: RepairModel,
}

impl Simulation {
    pub fn new(
        mut networks: Networks,
        scenario: HazardScenario,
        fragility: FragilityModel,
        repair: RepairModel,
    ) -> Result<Self> {
        scenario.validate()?;
        scenario.check_covers(&networks.roads)?;
        fragility.validate()?;
        repair.validate()?;
        resolve_fuel_sources(&mut networks.power, &networks.roads, &scenario)?;
        let topology = GridTopology::build(&networks.power, &networks.roads, &networks.households);
        Ok(Self { networks, topology, scenario, fragility, repair })
    }

    /// Same networks under another hazard scenario.
    pub fn with_scenario(&self, scenario: HazardScenario) -> Result<Self> {
        Self::new(self.networks.clone(), scenario, self.fragility, self.repair)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FailureSource {
    /// Draw damage from the fragility curves.
    Sampled,
    /// Fail exactly these components, with a damage level for substations.
    Scripted(Vec<(usize, Option<DamageLevel>)>),
}

#[derive(Debug, Clone)]
pub struct ReplicationConfig {
    pub strategy: Strategy,
    pub crews: u32,
    pub seed: u64,
    pub hard_cap_hours: u32,
    pub record_events: bool,
    pub failures: FailureSource,
}

impl ReplicationConfig {
    pub fn new(strategy: Strategy, crews: u32, seed: u64) -> Self {
        Self {
            strategy,
            crews,
            seed,
            hard_cap_hours: DEFAULT_HARD_CAP_HOURS,
            record_events: false,
            failures: FailureSource::Sampled,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "kebab-case")]
pub enum EventKind {
    Failed { component: String, damage: Option<DamageLevel> },
    RepairStarted { component: String, crews: u32, duration_h: u32 },
    Repaired { component: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub hour: u32,
    #[serde(flatten)]
    pub kind: EventKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HourRecord {
    pub hour: u32,
    pub q_households: f64,
    pub q_traffic_lights: f64,
    pub failed_components: usize,
    pub passable_links: usize,
}

/// World state when a replication is abandoned.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateSnapshot {
    pub hour: u32,
    pub unrepaired: Vec<String>,
    pub active_jobs: Vec<RepairJob>,
    pub idle_crews: u32,
    pub passable_links: usize,
    pub q_households: f64,
    pub q_traffic_lights: f64,
}

#[derive(Debug, Clone)]
pub struct ReplicationResult {
    pub seed: u64,
    pub strategy: Strategy,
    pub hours: Vec<HourRecord>,
    pub households: QualitySeries,
    pub traffic_lights: QualitySeries,
    pub initial_failures: usize,
    /// Set when the crew balance held at every hour.
    pub crews_conserved: bool,
    pub events: Vec<Event>,
}

impl ReplicationResult {
    /// Last simulated hour.
    pub fn end_hour(&self) -> u32 {
        self.hours.last().map_or(0, |h| h.hour)
    }
}

fn fail_scripted(net: &mut PowerNetwork, failures: &[(usize, Option<DamageLevel>)]) -> Result<usize> {
    for &(c, damage) in failures {
        let comp = net
            .components
            .get_mut(c)
            .ok_or_else(|| SimError::InvalidParams(format!("scripted failure names unknown component {c}")))?;
        comp.status = Status::Failed;
        comp.damage_level = damage;
    }
    Ok(net.failed_count())
}

pub fn run_replication(sim: &Simulation, cfg: &ReplicationConfig) -> Result<ReplicationResult> {
    let scenario = &sim.scenario;
    let mut net = sim.networks.power.clone();
    let mut roads = sim.networks.roads.clone();
    let mut households = sim.networks.households.clone();

    let rng_for = |stream: u64| {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(stream);
        rng
    };
    let initial_failures = match &cfg.failures {
        FailureSource::Sampled => sample_failures(&mut net, scenario, &sim.fragility, &mut rng_for(STREAM_FAILURES))?,
        FailureSource::Scripted(list) => fail_scripted(&mut net, list)?,
    };

    let mut repair_rng = rng_for(STREAM_REPAIRS);
    let mut draws: Vec<Option<RepairDraw>> = vec![None; net.len()];
    let mut events = Vec::new();
    for (i, c) in net.components.iter().enumerate() {
        if c.status == Status::Failed {
            draws[i] = Some(sample_repair(c, &sim.repair, &mut repair_rng)?);
            if cfg.record_events {
                events.push(Event {
                    hour: 0,
                    kind: EventKind::Failed { component: c.id.clone(), damage: c.damage_level },
                });
            }
        }
    }

    let mut strategy_rng = rng_for(STREAM_STRATEGY);
    let mut scheduler = Scheduler::new(cfg.strategy, CrewPool::new(cfg.crews)?);
    let mut flood = FloodState::new(scenario);
    let mut hours = Vec::new();
    let mut crews_conserved = true;

    for hour in 0.. {
        if hour > 0 {
            flood.advance(scenario);
        }
        for c in scheduler.complete_due(&mut net, hour) {
            if cfg.record_events {
                events.push(Event { hour, kind: EventKind::Repaired { component: net.components[c].id.clone() } });
            }
        }

        let fueled: Vec<bool> = (0..net.len())
            .map(|c| net.plants.contains(&c) && plant_operational(c, &net, &roads, &flood, scenario))
            .collect();
        let powered = powered_set(&net, |p| fueled[p]);
        let q_households = powered_households(&mut households, &powered);
        let q_traffic_lights = powered_traffic_lights(&mut roads, &powered);
        let passable_links = flood.passable_count(scenario);
        hours.push(HourRecord {
            hour,
            q_households,
            q_traffic_lights,
            failed_components: net.failed_count(),
            passable_links,
        });
        crews_conserved &= scheduler.crews_conserved();

        if net.all_restored() && q_households >= 1.0 && q_traffic_lights >= 1.0 {
            break;
        }
        if hour >= cfg.hard_cap_hours {
            let snapshot = StateSnapshot {
                hour,
                unrepaired: net.components.iter().filter(|c| c.is_unrepaired()).map(|c| c.id.clone()).collect(),
                active_jobs: scheduler.jobs.clone(),
                idle_crews: scheduler.pool.available(),
                passable_links,
                q_households,
                q_traffic_lights,
            };
            return Err(SimError::HardCapExceeded { cap: cfg.hard_cap_hours, snapshot: Box::new(snapshot) });
        }

        let started = scheduler.start_jobs(
            hour,
            &mut net,
            &roads,
            &sim.topology,
            &powered,
            &flood,
            scenario,
            &draws,
            &mut strategy_rng,
        );
        crews_conserved &= scheduler.crews_conserved();
        if cfg.record_events {
            for job in started {
                events.push(Event {
                    hour,
                    kind: EventKind::RepairStarted {
                        component: net.components[job.component].id.clone(),
                        crews: job.crews,
                        duration_h: job.duration,
                    },
                });
            }
        }
    }

    let households_q = QualitySeries::new(0, hours.iter().map(|h| h.q_households).collect());
    let lights_q = QualitySeries::new(0, hours.iter().map(|h| h.q_traffic_lights).collect());
    Ok(ReplicationResult {
        seed: cfg.seed,
        strategy: cfg.strategy,
        hours,
        households: households_q,
        traffic_lights: lights_q,
        initial_failures,
        crews_conserved,
        events,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fragility::RepairRow;
    use crate::metrics::trl;
    use crate::network::fixtures::two_branch;

    fn sim(wind: f64, depth: f64, fuel: bool, access: bool) -> Simulation {
        let nets = two_branch();
        let scenario =
            HazardScenario::uniform(wind, depth, nets.roads.links.len()).with_dependencies(fuel, access);
        let repair = RepairModel {
            line: RepairRow { mean_h: 48.0, sd_h: 0.0, crews: 4 },
            pole: RepairRow { mean_h: 5.0, sd_h: 0.0, crews: 1 },
            ..RepairModel::default()
        };
        Simulation::new(nets, scenario, FragilityModel::default(), repair).unwrap()
    }

    fn scripted(sim: &Simulation, ids: &[&str]) -> FailureSource {
        FailureSource::Scripted(ids.iter().map(|id| (sim.networks.power.find(id).unwrap(), None)).collect())
    }

    #[test]
    fn calm_dry_storm_ends_at_hour_zero() {
        let s = sim(0.0, 0.0, true, true);
        let r = run_replication(&s, &ReplicationConfig::new(Strategy::ComponentBased, 5, 1)).unwrap();
        assert_eq!(r.end_hour(), 0);
        assert_eq!(r.initial_failures, 0);
        assert_eq!(r.households.samples, vec![1.0]);
        assert_eq!(trl(&r.households), 0.0);
    }

    #[test]
    fn single_line_failure_blacks_out_until_repaired() {
        let s = sim(0.0, 0.0, false, false);
        let mut cfg = ReplicationConfig::new(Strategy::DistanceBased, 5, 1);
        cfg.failures = scripted(&s, &["L"]);
        cfg.record_events = true;
        let r = run_replication(&s, &cfg).unwrap();
        assert_eq!(r.end_hour(), 48);
        assert!(r.households.samples[..48].iter().all(|&q| q == 0.0));
        assert_eq!(r.households.samples[48], 1.0);
        assert_eq!(trl(&r.households), 48.0);
        assert_eq!(trl(&r.traffic_lights), 48.0);
        assert!(r.crews_conserved);
        let kinds: Vec<_> = r.events.iter().map(|e| (e.hour, e.kind.clone())).collect();
        assert_eq!(kinds.len(), 3);
        assert_eq!(kinds[1], (0, EventKind::RepairStarted { component: "L".into(), crews: 4, duration_h: 48 }));
        assert_eq!(kinds[2], (48, EventKind::Repaired { component: "L".into() }));
    }

    #[test]
    fn flooded_fuel_route_delays_power() {
        let mut s = sim(0.0, 12.0, true, true);
        s.networks.power.fuel_source[0] = s.networks.roads.find_node("n6");
        let r = run_replication(&s, &ReplicationConfig::new(Strategy::DistanceBased, 5, 1)).unwrap();
        assert_eq!(r.end_hour(), 16);
        assert_eq!(trl(&r.households), 16.0);
        assert!(r.hours.windows(2).all(|w| w[0].passable_links <= w[1].passable_links));
        assert_eq!(r.hours[0].passable_links, 0);
        assert_eq!(r.hours[16].passable_links, 6);
    }

    #[test]
    fn no_fuel_dependence_ignores_flooded_route() {
        let mut s = sim(0.0, 12.0, false, true);
        s.networks.power.fuel_source[0] = s.networks.roads.find_node("n6");
        let r = run_replication(&s, &ReplicationConfig::new(Strategy::DistanceBased, 5, 1)).unwrap();
        assert_eq!(r.end_hour(), 0);
    }

    #[test]
    fn crews_wait_for_water_to_drain() {
        let s = sim(0.0, 13.0, false, true);
        let mut cfg = ReplicationConfig::new(Strategy::DistanceBased, 5, 1);
        cfg.failures = scripted(&s, &["DA"]);
        let r = run_replication(&s, &cfg).unwrap();
        // Access opens at hour 17, the 5 h job finishes at 22.
        assert_eq!(r.end_hour(), 22);
    }

    #[test]
    fn hard_cap_reports_state() {
        let mut s = sim(0.0, 26.0, false, true);
        s.scenario.drainage_rate = 0.001;
        let mut cfg = ReplicationConfig::new(Strategy::DistanceBased, 5, 1);
        cfg.failures = scripted(&s, &["DA"]);
        cfg.hard_cap_hours = 50;
        match run_replication(&s, &cfg) {
            Err(SimError::HardCapExceeded { cap, snapshot }) => {
                assert_eq!(cap, 50);
                assert_eq!(snapshot.hour, 50);
                assert_eq!(snapshot.unrepaired, vec!["DA".to_string()]);
                assert_eq!(snapshot.idle_crews, 5);
            }
            other => panic!("expected hard cap, got {other:?}"),
        }
    }

    #[test]
    fn same_seed_same_run() {
        let s = sim(140.0, 13.0, true, true);
        for strategy in Strategy::ALL {
            let cfg = ReplicationConfig::new(strategy, 3, 42);
            let a = run_replication(&s, &cfg).unwrap();
            let b = run_replication(&s, &cfg).unwrap();
            assert_eq!(a.hours, b.hours);
            assert!(a.crews_conserved);
        }
    }
}
