//! Cross-module invariants: algebraic properties over randomized inputs
//! (proptest) and structural checks of the flows and estimators.

use mrlab::circle::{
    gap_stats, interaction_drift, log_potential_g, repulsion_psi, vandermonde_f,
    AngleConfiguration,
};
use mrlab::energy::multiradial_energy;
use mrlab::flow::zero_energy_flow;
use mrlab::ldp::EventSpec;
use mrlab::loewner::{trace, WeightFunction};
use mrlab::path::{
    apply_time_change, embed_circle, principal_angle, sup_distance, DrivingPath, TimeChange,
};
use mrlab::sde::{simulate_dyson, SimulationConfig};
use proptest::prelude::*;
use std::f64::consts::PI;

/// Ordered configurations with gaps bounded away from collision.
fn configurations(max_n: usize) -> impl Strategy<Value = AngleConfiguration<f64>> {
    (2..=max_n)
        .prop_flat_map(|n| {
            (
                proptest::collection::vec(1e-2..1.0f64, n),
                0.0..(2.0 * PI),
            )
        })
        .prop_map(|(raw, shift)| {
            // normalize positive increments onto a sub-2π span
            let total: f64 = raw.iter().sum();
            let scale = (2.0 * PI - 0.05) / total;
            let mut angles = Vec::with_capacity(raw.len());
            let mut acc = shift;
            for r in &raw {
                angles.push(acc);
                acc += r * scale;
            }
            AngleConfiguration::new(angles).expect("construction preserves ordering")
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn rotation_invariance_of_circle_functions(
        theta in configurations(6),
        c in -10.0..10.0f64,
    ) {
        let rotated = theta.rotated(c);
        for j in 0..theta.n() {
            let a = interaction_drift(&theta, j, 4.0).unwrap();
            let b = interaction_drift(&rotated, j, 4.0).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
        }
        let (_, psi_a) = repulsion_psi(&theta).unwrap();
        let (_, psi_b) = repulsion_psi(&rotated).unwrap();
        prop_assert!((psi_a - psi_b).abs() <= 1e-12 * psi_a);
        let f_a = vandermonde_f(&theta, 1.0);
        let f_b = vandermonde_f(&rotated, 1.0);
        prop_assert!((f_a - f_b).abs() <= 1e-12);
        let g_a = log_potential_g(&theta, 4.0).unwrap();
        let g_b = log_potential_g(&rotated, 4.0).unwrap();
        prop_assert!((g_a - g_b).abs() <= 1e-12 * (1.0 + g_a.abs()));
        let s_a = gap_stats(&theta);
        let s_b = gap_stats(&rotated);
        prop_assert!((s_a.d - s_b.d).abs() <= 1e-12);
        prop_assert!((s_a.delta_min - s_b.delta_min).abs() <= 1e-12);
    }

    #[test]
    fn drift_sums_to_zero(theta in configurations(8)) {
        let total: f64 = (0..theta.n())
            .map(|j| interaction_drift(&theta, j, 4.0).unwrap())
            .sum();
        let scale: f64 = (0..theta.n())
            .map(|j| interaction_drift(&theta, j, 4.0).unwrap().abs())
            .sum();
        prop_assert!(total.abs() <= 1e-9 * (1.0 + scale));
    }

    #[test]
    fn gap_stats_structural_invariants(theta in configurations(8)) {
        let n = theta.n() as f64;
        let s = gap_stats(&theta);
        prop_assert!(s.delta_min >= 0.0 && s.delta_min <= 2.0 * PI / n + 1e-12);
        prop_assert!(s.y >= -1e-12 && s.big_y >= -1e-12);
        prop_assert!((s.d - s.y.max(s.big_y)).abs() == 0.0);
        prop_assert!(s.big_y <= (n - 1.0) * s.y + 1e-12);
        prop_assert!(!s.argmin.is_empty());
    }

    #[test]
    fn sup_metric_axioms(
        seeds in proptest::collection::vec(-1.0..1.0f64, 9),
        n in 1usize..4,
    ) {
        let make = |off: &[f64]| {
            DrivingPath::from_fn(n, 1.0, 0.1, |t, j| {
                j as f64 * 2.0 * PI / n as f64 + off[j % 3] * (t + 1.0)
            })
        };
        let p = make(&seeds[0..3]);
        let q = make(&seeds[3..6]);
        let r = make(&seeds[6..9]);
        let dpq = sup_distance(&p, &q).unwrap();
        let dqp = sup_distance(&q, &p).unwrap();
        prop_assert_eq!(dpq, dqp);
        prop_assert_eq!(sup_distance(&p, &p).unwrap(), 0.0);
        let dpr = sup_distance(&p, &r).unwrap();
        let dqr = sup_distance(&q, &r).unwrap();
        prop_assert!(dpq <= dpr + dqr + 1e-12);
    }

    #[test]
    fn embedding_round_trip(angles in proptest::collection::vec(-20.0..20.0f64, 1..6)) {
        let mut sorted = angles.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        sorted.dedup_by(|a, b| (*a - *b).abs() < 1e-6);
        // collapse to a valid configuration on a lift
        let lifted: Vec<f64> = sorted
            .iter()
            .enumerate()
            .map(|(i, x)| x.rem_euclid(2.0 * PI) / (2.0 * PI) * 0.8 + i as f64 * 1e-3)
            .collect();
        if let Ok(cfg) = AngleConfiguration::new(lifted) {
            let p = DrivingPath::new(vec![0.0, 1.0], vec![cfg.angles().to_vec(); 2]).unwrap();
            let z = embed_circle(&p);
            for (j, &orig) in cfg.angles().iter().enumerate() {
                let back = principal_angle(z[0][j]);
                let expect = orig.rem_euclid(2.0 * PI);
                let diff = (back - expect).abs().min((back - expect).abs() - 2.0 * PI);
                prop_assert!(diff.abs() <= 1e-12 || (back - expect).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn time_change_round_trip(rates in proptest::collection::vec(0.2..3.0f64, 4)) {
        // piecewise-linear σ with slopes bounded away from 0 and ∞
        let p = DrivingPath::from_fn(2, 2.0, 0.01, |t: f64, j| j as f64 * PI + 0.2 * (t * 1.7).sin());
        let times: Vec<f64> = (0..=40).map(|i| i as f64 * 0.025).collect();
        let mut sigma = vec![0.0];
        for i in 1..times.len() {
            let prev = sigma[i - 1];
            sigma.push(prev + rates[i % rates.len()] * 0.025);
        }
        let last = *sigma.last().unwrap();
        if last > 2.0 {
            let scale = 2.0 / last;
            for s in sigma.iter_mut() {
                *s *= scale;
            }
        }
        let tc = TimeChange::new(times, sigma).unwrap();
        let q = apply_time_change(&p, &tc).unwrap();
        let back = apply_time_change(&q, &tc.inverse()).unwrap();
        let reference = p.resample(back.times()).unwrap();
        prop_assert!(sup_distance(&reference, &back).unwrap() <= 1e-10);
    }

    #[test]
    fn energy_time_change_bounds(stretch in 0.3..3.0f64) {
        // E(θ̂) lies between inf σ̇ · E(θ) and sup σ̇ · E(θ)
        let p = DrivingPath::from_fn(1, 1.0, 1e-3, |t: f64, _| (2.0 * t).sin() * 0.5);
        let e = mrlab::energy::dirichlet_energy(&p);
        // build σ on exact grid values so its range never exceeds the horizon
        let sigma: Vec<f64> = (0..=200).map(|i| i as f64 * 0.005).collect();
        let times: Vec<f64> = sigma.iter().map(|s| s / stretch).collect();
        let tc = TimeChange::new(times, sigma).unwrap();
        let q = apply_time_change(&p, &tc).unwrap();
        let e_hat = mrlab::energy::dirichlet_energy(&q);
        prop_assert!(e_hat <= tc.sup_rate() * e * (1.0 + 1e-6) + 1e-12);
        prop_assert!(e_hat >= e / tc.sup_inv_rate() * (1.0 - 1e-3) - 1e-12);
    }
}

#[test]
fn zero_energy_flow_limit_angle_exists() {
    // tail increments of θ¹ decay and are numerically summable
    let theta0 = AngleConfiguration::new(vec![0.3, 1.8, 3.6, 5.1]).unwrap();
    let flow = zero_energy_flow(&theta0, 6.0, 1e-3, 4.0, 0.0).unwrap();
    let samples: Vec<f64> = (0..=6)
        .map(|k| {
            let i = (k as f64 / 6.0 * (flow.len() - 1) as f64) as usize;
            flow.state(i)[0]
        })
        .collect();
    let mut increments: Vec<f64> = samples.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    increments.retain(|d| *d > 1e-15);
    for w in increments.windows(2) {
        assert!(w[1] < w[0], "tail increments not decreasing: {increments:?}");
    }
    // finite-energy characterization: the flow keeps J finite and collision-free
    assert!(multiradial_energy(&flow, 4.0, 0.0).is_finite());
}

#[test]
fn finite_energy_characterization_on_constructed_families() {
    // finite energy ⇔ finite coordinate energies and no collision by T
    let smooth = DrivingPath::from_fn(2, 1.0, 1e-3, |t: f64, j| j as f64 * PI + 0.1 * (3.0 * t).sin());
    assert!(multiradial_energy(&smooth, 4.0, 0.0).is_finite());

    // a pinching path has infinite multiradial energy
    let pinch = DrivingPath::from_fn(2, 1.0, 1e-3, |t, j| {
        if j == 0 {
            0.0
        } else {
            (PI * (1.0 - t)).max(1e-14)
        }
    });
    assert_eq!(multiradial_energy(&pinch, 4.0, 0.0), f64::INFINITY);
}

#[test]
fn weak_order_sanity_under_dt_halving() {
    // halving dt moves the ensemble mean of a smooth functional by less
    // than 3 combined standard errors at ensemble 10⁴
    let theta0 = AngleConfiguration::new(vec![0.0, PI]).unwrap();
    let run = |dt: f64| {
        let mut cfg = SimulationConfig::new(theta0.clone(), 1.0, 4.0, 0.5, dt);
        cfg.ensemble = 10_000;
        cfg.seed = 424;
        let ens = simulate_dyson(&cfg);
        let vals: Vec<f64> = ens
            .paths
            .iter()
            .filter(|p| p.terminated_at().is_none())
            .map(|p| (p.final_state()[1] - p.final_state()[0]).cos())
            .collect();
        let n = vals.len() as f64;
        let mean = vals.iter().sum::<f64>() / n;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, (var / n).sqrt())
    };
    let (m1, s1) = run(2e-3);
    let (m2, s2) = run(1e-3);
    assert!(
        (m1 - m2).abs() <= 3.0 * (s1 * s1 + s2 * s2).sqrt(),
        "means {m1} vs {m2} differ beyond combined SE"
    );
}

#[test]
fn importance_sampling_agrees_with_direct_on_common_events() {
    // an event with P well above 0.05: both probability estimators agree
    // within 3 combined standard errors
    let theta0 = AngleConfiguration::new(vec![0.0, PI]).unwrap();
    let center = DrivingPath::from_fn(2, 0.5, 0.01, |_, j| j as f64 * PI);
    let event = EventSpec::SupBall { center, radius: 0.8 };
    let mut cfg = SimulationConfig::new(theta0, 0.5, 4.0, 0.5, 1e-3);
    cfg.ensemble = 8000;
    cfg.seed = 99;
    let ens = simulate_dyson(&cfg);
    let hits = ens.paths.iter().filter(|p| event.holds(p)).count();
    let n = cfg.ensemble as f64;
    let p_direct = hits as f64 / n;
    let se_direct = (p_direct * (1.0 - p_direct) / n).sqrt();
    assert!(p_direct >= 0.05, "event too rare for this check: {p_direct}");

    let wens = mrlab::sde::simulate_weighted(&cfg).unwrap();
    let weights = wens.weights.as_ref().unwrap();
    let vals: Vec<f64> = wens
        .paths
        .iter()
        .zip(weights)
        .map(|(p, &w)| if event.holds(p) { w } else { 0.0 })
        .collect();
    let mean = vals.iter().sum::<f64>() / n;
    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let se_weighted = (var / n).sqrt();
    let gap = (p_direct - mean).abs();
    let limit = 3.0 * (se_direct * se_direct + se_weighted * se_weighted).sqrt();
    assert!(gap <= limit, "direct {p_direct} vs weighted {mean}, 3SE = {limit}");
}

#[test]
fn nested_events_monotone_at_estimator_level() {
    let theta0 = AngleConfiguration::new(vec![0.0, PI]).unwrap();
    let center = DrivingPath::from_fn(2, 0.5, 0.01, |_, j| j as f64 * PI);
    let mut cfg = SimulationConfig::new(theta0, 0.5, 4.0, 0.5, 2e-3);
    cfg.ensemble = 2000;
    cfg.seed = 17;
    let ens = simulate_dyson(&cfg);
    let mut last = 0usize;
    for radius in [0.3, 0.5, 0.8] {
        let event = EventSpec::SupBall { center: center.clone(), radius };
        let hits = ens.paths.iter().filter(|p| event.holds(p)).count();
        assert!(hits >= last, "estimator not monotone across nested events");
        last = hits;
    }
    assert!(last > 0);
}

#[test]
fn finite_energy_traces_stay_simple_and_disjoint() {
    // empirical simplicity diagnostics on a finite-energy two-chord driver
    let p = DrivingPath::from_fn(2, 0.8, 1e-3, |t: f64, j| {
        j as f64 * PI + 0.25 * ((2.0 + j as f64) * t).sin()
    });
    let lam = WeightFunction::constant(1.0);
    let times: Vec<f64> = (0..=16).map(|k| 0.05 * k as f64).collect();
    let tr = trace(&p, &times, 1e-4, &lam).unwrap();
    // distinct chords never get close
    let mut min_cross = f64::INFINITY;
    for a in &tr.points[0] {
        for b in &tr.points[1] {
            min_cross = min_cross.min((a.point - b.point).norm());
        }
    }
    assert!(min_cross > 0.05, "chords approach each other: {min_cross}");
    // each chord is injective on samples: non-adjacent points stay apart
    for chord in &tr.points {
        for (i, a) in chord.iter().enumerate() {
            for b in chord.iter().skip(i + 2) {
                assert!(
                    (a.point - b.point).norm() > 1e-4,
                    "near self-touching at t = {} vs t = {}",
                    a.t,
                    b.t
                );
            }
        }
    }
    // no flagged points on a finite-energy driver
    assert!(tr.points.iter().flatten().all(|q| !q.flagged));
}
