use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use hurrisim_core::fragility::{
    p_fail_conductor, p_fail_line, p_fail_pole, p_fail_substation, p_fail_tower, sample_failures, sample_repair,
    FragilityModel, LineFragilityParams,
    Lognormal, RepairModel, SubstationFragilityParams,
};
use hurrisim_core::hazard::{first_passable_hour, FloodState, HazardScenario};
use hurrisim_core::metrics::{mpr, restoration_quantiles, trl, QualitySeries};
use hurrisim_core::network::{powered_set, ComponentKind, Point, PowerComponent, PowerNetwork, Status};

fn sweep() -> impl Iterator<Item = f64> {
    (0..10_000).map(|i| 250.0 * i as f64 / 9_999.0)
}

#[test]
fn curves_are_monotone_probabilities() {
    let line = LineFragilityParams::default();
    let subs = SubstationFragilityParams::default();
    let curves: Vec<Box<dyn Fn(f64) -> f64>> = vec![
        Box::new(p_fail_tower),
        Box::new(p_fail_pole),
        Box::new(p_fail_conductor),
        Box::new(move |x| p_fail_line(x, &line).unwrap()),
        Box::new(move |x| p_fail_substation(x, &subs).unwrap().moderate),
    ];
    for f in curves {
        let mut prev = f64::NEG_INFINITY;
        for x in sweep() {
            let p = f(x);
            assert!((0.0..=1.0).contains(&p), "p({x}) = {p}");
            assert!(p >= prev, "decrease at {x}");
            prev = p;
        }
    }
}

proptest! {
    #[test]
    fn substation_levels_nest(m in 40.0f64..200.0, gap1 in 1.0f64..80.0, gap2 in 1.0f64..80.0, sigma in 0.05f64..0.6) {
        let params = SubstationFragilityParams {
            moderate: Lognormal::from_median(m, sigma),
            severe: Lognormal::from_median(m + gap1, sigma),
            complete: Lognormal::from_median(m + gap1 + gap2, sigma),
        };
        prop_assert!(params.validate().is_ok());
        for x in sweep().step_by(10) {
            let (m, s, c) = (params.moderate.cdf(x), params.severe.cdf(x), params.complete.cdf(x));
            prop_assert!(c <= s && s <= m);
        }
    }

    #[test]
    fn line_curve_stays_in_range(c in 10.0f64..150.0, span in 1.0f64..150.0, x in 0.0f64..300.0) {
        let p = p_fail_line(x, &LineFragilityParams { w_critical: c, w_collapse: c + span }).unwrap();
        prop_assert!((0.01..=1.0).contains(&p));
    }

    #[test]
    fn trl_lies_between_zero_and_mpr(q in prop::collection::vec(0.0f64..=1.0, 1..200)) {
        let s = QualitySeries::new(0, q.clone());
        let loss = trl(&s);
        let horizon = s.t1() as f64;
        prop_assert!(loss >= 0.0);
        if horizon > 0.0 {
            prop_assert!(loss <= mpr(horizon).unwrap() + 1e-9);
        }
        prop_assert_eq!(loss == 0.0, q.iter().all(|&v| v >= 1.0));
    }

    #[test]
    fn better_quality_never_loses_more(pairs in prop::collection::vec((0.0f64..=1.0, 0.0f64..=1.0), 1..200)) {
        let worse: Vec<f64> = pairs.iter().map(|&(a, b)| a.min(b)).collect();
        let better: Vec<f64> = pairs.iter().map(|&(a, b)| a.max(b)).collect();
        prop_assert!(trl(&QualitySeries::new(0, better)) <= trl(&QualitySeries::new(0, worse)) + 1e-9);
    }

    #[test]
    fn quantile_hours_grow_with_level(steps in prop::collection::vec(0.0f64..0.2, 1..100)) {
        let mut q = 0.0;
        let mut samples: Vec<f64> = steps.iter().map(|d| { q = f64::min(q + d, 1.0); q }).collect();
        samples.push(1.0);
        let hours = restoration_quantiles(&QualitySeries::new(0, samples), &[0.25, 0.5, 0.75, 0.9, 1.0]).unwrap();
        prop_assert!(hours.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn reopening_hour_matches_stepping(depth in 0.0f64..30.0, rate in 0.1f64..2.0, threshold in 0.5f64..4.0) {
        let mut s = HazardScenario::uniform(0.0, depth, 1);
        s.drainage_rate = rate;
        s.passability_threshold = threshold;
        let mut flood = FloodState::new(&s);
        let mut hour = 0;
        while !flood.passable(&s, 0) {
            flood.advance(&s);
            hour += 1;
        }
        prop_assert_eq!(hour, first_passable_hour(depth, rate, threshold));
    }
}

/// Reachability by repeated edge relaxation, independent of the BFS under test.
fn reachable(n: usize, edges: &[(usize, usize)], sources: &[usize], up: &[bool]) -> Vec<bool> {
    let mut on = vec![false; n];
    for &s in sources {
        on[s] = up[s];
    }
    loop {
        let mut changed = false;
        for &(a, b) in edges {
            if on[a] && up[b] && !on[b] {
                on[b] = true;
                changed = true;
            }
            if on[b] && up[a] && !on[a] {
                on[a] = true;
                changed = true;
            }
        }
        if !changed {
            return on;
        }
    }
}

#[test]
fn powered_set_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..1000 {
        let n = rng.random_range(1..=200);
        let plants = rng.random_range(1..=n.min(3));
        let comps: Vec<PowerComponent> = (0..n)
            .map(|i| {
                let kind = if i < plants { ComponentKind::Plant } else { ComponentKind::DistributionPole };
                let mut c = PowerComponent::new(format!("c{i}"), kind, Point::new(i as f64, 0.0));
                if rng.random_bool(0.2) {
                    c.status = if rng.random_bool(0.5) { Status::Failed } else { Status::UnderRepair };
                } else if rng.random_bool(0.1) {
                    c.status = Status::Repaired;
                }
                c
            })
            .collect();
        let m = rng.random_range(0..=2 * n);
        let edges: Vec<(usize, usize)> =
            (0..m).map(|_| (rng.random_range(0..n), rng.random_range(0..n))).filter(|(a, b)| a != b).collect();
        let fueled: Vec<bool> = (0..n).map(|_| rng.random_bool(0.8)).collect();
        let up: Vec<bool> = comps
            .iter()
            .enumerate()
            .map(|(i, c)| c.status.conducts() && (c.kind != ComponentKind::Plant || fueled[i]))
            .collect();
        let net = PowerNetwork::new(comps, edges.clone());
        let got = powered_set(&net, |p| fueled[p]);
        let want = reachable(n, &edges, &(0..plants).collect::<Vec<_>>(), &up);
        for (i, &w) in want.iter().enumerate() {
            assert_eq!(got.contains(i), w, "component {i}");
        }
    }
}

#[test]
fn pole_failures_are_binomial_at_scale() {
    let n = 100_000usize;
    let p = p_fail_pole(115.0);
    let comps: Vec<PowerComponent> = (0..n)
        .map(|i| PowerComponent::new(format!("p{i}"), ComponentKind::DistributionPole, Point::new(0.0, 0.0)))
        .collect();
    let mut net = PowerNetwork::new(comps, vec![]);
    let scenario = HazardScenario::uniform(115.0, 0.0, 1);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let hits = sample_failures(&mut net, &scenario, &FragilityModel::default(), &mut rng).unwrap() as f64;
    let sd = (n as f64 * p * (1.0 - p)).sqrt();
    assert!((hits - n as f64 * p).abs() <= 3.0 * sd, "{hits} vs {}", n as f64 * p);
}

#[test]
fn repair_durations_average_to_the_mean() {
    let model = RepairModel::default();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for kind in [ComponentKind::TransmissionLine, ComponentKind::TransmissionTower, ComponentKind::DistributionPole] {
        let c = PowerComponent::new("x", kind, Point::new(0.0, 0.0));
        let row = model.row(kind, None).unwrap();
        let n = 20_000;
        let total: u64 = (0..n).map(|_| sample_repair(&c, &model, &mut rng).unwrap().hours as u64).sum();
        let mean = total as f64 / n as f64;
        assert!((mean - row.mean_h).abs() <= 0.05 * row.mean_h, "{kind}: {mean}");
    }
}
