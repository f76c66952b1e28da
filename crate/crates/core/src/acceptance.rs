//! End-to-end verification suite.
//!
//! Each criterion pins its tolerances in code and reports one pass/fail
//! line; the `check` CLI subcommand and the `acceptance` integration test
//! both drive [`run_all`]. Details carry the measured values (never
//! wall-clock times, so emitted artifacts stay byte-reproducible).

use crate::circle::{gap_stats, gap_stats_raw, repulsion_psi, AngleConfiguration};
use crate::energy::{
    decomposition_check, dirichlet_energy, energy_report, multiradial_energy,
    multiradial_energy_intervals, phi_functional, phi_functional_identity,
};
use crate::flow::{convergence_report, counterexample_driver, gap_bound_check, zero_energy_flow};
use crate::ldp::{
    mc_ldp_curve, minimize_rate, tail_bound_check, EventSpec, LdpCurvePoint, MinimizeOptions,
    RateObjective, TailRow,
};
use crate::loewner::{
    backward_derivative_pair, capacity_check, trace, trace_derivative_bound, LoewnerTrace,
    WeightFunction, WeightKind,
};
use crate::path::DrivingPath;
use crate::rng::path_rng;
use crate::sde::{simulate_dyson, simulate_weighted, SimulationConfig};
use rand::Rng;
use serde::Serialize;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::time::Instant;

/// Outcome of one acceptance criterion.
#[derive(Debug, Clone, Serialize)]
pub struct CriterionOutcome {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    /// Wall clock, reported on stderr only — never serialized into result
    /// artifacts, which must be byte-reproducible.
    #[serde(skip)]
    pub elapsed_s: f64,
}

impl CriterionOutcome {
    pub fn line(&self) -> String {
        format!(
            "[{}] criterion {:2}: {} ({:.2}s) — {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.elapsed_s,
            self.detail
        )
    }
}

fn outcome(
    id: usize,
    name: &'static str,
    started: Instant,
    passed: bool,
    detail: String,
) -> CriterionOutcome {
    CriterionOutcome { id, name, passed, detail, elapsed_s: started.elapsed().as_secs_f64() }
}

/// Runs all criteria in order. `seed` feeds every Monte Carlo ensemble;
/// the gate is calibrated (and verified where attainable) at seed 0.
pub fn run_all(seed: u64) -> Vec<CriterionOutcome> {
    vec![
        criterion_1(),
        criterion_2(seed),
        criterion_3(seed),
        criterion_4(),
        criterion_5(seed),
        criterion_6(seed),
        criterion_7(seed),
        criterion_8(seed),
        criterion_9(seed),
        criterion_10(),
        criterion_11(seed),
        criterion_12(seed),
        criterion_13(seed),
        criterion_14(seed),
    ]
}

/// Criterion 1 — zero-energy closed form for two particles:
/// `|cos(g_t/2) − cos(g_0/2) e^{−2t}| ≤ 1e−8` along the integrated flow.
pub fn criterion_1() -> CriterionOutcome {
    let started = Instant::now();
    let mut worst = 0.0f64;
    for g0 in [PI / 4.0, PI / 2.0, 3.0 * PI / 4.0] {
        let theta0 = AngleConfiguration::new(vec![0.0, g0]).unwrap();
        let flow = zero_energy_flow(&theta0, 3.0, 1e-3, 4.0, 0.0).unwrap();
        for (i, &t) in flow.times().iter().enumerate() {
            let g = flow.state(i)[1] - flow.state(i)[0];
            let err = ((g / 2.0).cos() - (g0 / 2.0).cos() * (-2.0 * t).exp()).abs();
            worst = worst.max(err);
        }
    }
    let elapsed = started.elapsed().as_secs_f64();
    let passed = worst <= 1e-8 && elapsed < 1.0;
    outcome(
        1,
        "zero-energy closed form (n=2)",
        started,
        passed,
        format!("max |cos(g/2) - cos(g_0/2)exp(-2t)| = {worst:.3e} (tol 1e-8)"),
    )
}

/// Perturbed equally spaced starts with `d(θ_0)` in a target band.
fn randomized_starts(n: usize, count: usize, seed: u64) -> Vec<AngleConfiguration<f64>> {
    let mut rng = path_rng(seed, 1000 + n as u64);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let base = AngleConfiguration::equally_spaced(n, rng.random_range(0.0..1.0));
        let pert: Vec<f64> = (0..n)
            .map(|j| base.angles()[j] + rng.random_range(-0.2f64..0.2))
            .collect();
        if let Ok(cfg) = AngleConfiguration::new(pert) {
            let d = gap_stats(&cfg).d;
            if (0.15..=0.5).contains(&d) {
                out.push(cfg);
            }
        }
    }
    out
}

fn rate_suite(seed: u64) -> Vec<(usize, DrivingPath<f64>)> {
    let mut flows = Vec::new();
    for (n, t_final) in [(2usize, 10.0), (3, 5.5), (5, 3.0)] {
        for theta0 in randomized_starts(n, 2, seed) {
            flows.push((n, zero_energy_flow(&theta0, t_final, 1e-3, 4.0, 0.0).unwrap()));
        }
    }
    flows
}

/// Criterion 2 — fitted decay rate of `d(θ_t)` within 5% of `n` for
/// `n ∈ {2, 3, 5}` zero-energy flows from randomized starts.
pub fn criterion_2(seed: u64) -> CriterionOutcome {
    let started = Instant::now();
    let mut passed = true;
    let mut details = Vec::new();
    for (n, flow) in rate_suite(seed) {
        let report = convergence_report(&flow, None);
        match report.fitted_rate {
            Some(rate) => {
                let rel = (rate - n as f64).abs() / n as f64;
                if rel > 0.05 {
                    passed = false;
                }
                details.push(format!("n={n}: fitted {rate:.4} (off n by {:.1}%)", rel * 100.0));
            }
            None => {
                passed = false;
                details.push(format!("n={n}: fit unreliable"));
            }
        }
    }
    let elapsed = started.elapsed().as_secs_f64();
    let passed = passed && elapsed < 10.0;
    outcome(2, "exponential rate n of d(theta_t)", started, passed, details.join("; "))
}

/// Criterion 3 — `Δ(t)` nondecreasing (slack 1e−10) along every
/// zero-energy flow in the suite.
pub fn criterion_3(seed: u64) -> CriterionOutcome {
    let started = Instant::now();
    let mut worst_drop = 0.0f64;
    let mut suite = rate_suite(seed).into_iter().map(|(_, f)| f).collect::<Vec<_>>();
    for g0 in [PI / 4.0, PI / 2.0, 3.0 * PI / 4.0] {
        let theta0 = AngleConfiguration::new(vec![0.0, g0]).unwrap();
        suite.push(zero_energy_flow(&theta0, 3.0, 1e-3, 4.0, 0.0).unwrap());
    }
    for flow in &suite {
        let mut last = f64::NEG_INFINITY;
        for i in 0..flow.len() {
            let delta = gap_stats_raw(flow.state(i)).delta_min;
            worst_drop = worst_drop.max(last - delta);
            last = delta;
        }
    }
    let passed = worst_drop <= 1e-10;
    outcome(
        3,
        "gap monotonicity along zero-energy flows",
        started,
        passed,
        format!("worst single-step decrease of the minimal gap = {worst_drop:.3e} (slack 1e-10)"),
    )
}

/// Criterion 4 — polynomial-convergence counterexample: the forced
/// two-particle system dominates its analytic lower bound and has
/// `J_T = (ε²/2)(1 − 1/(1+T))` to 1e−6.
pub fn criterion_4() -> CriterionOutcome {
    let started = Instant::now();
    let (eps, t_final) = (0.1, 50.0);
    let flow = counterexample_driver(eps, t_final, 1e-3).unwrap();
    let mut bound_ok = true;
    let mut worst_margin = f64::INFINITY;
    for (i, &b) in flow.lower_bound.iter().enumerate() {
        let d = gap_stats_raw(flow.path.state(i)).d;
        if d < b {
            bound_ok = false;
        }
        worst_margin = worst_margin.min(d - b);
    }
    let j = multiradial_energy(&flow.path, 4.0, 0.0);
    let j_oracle = eps * eps / 2.0 * (1.0 - 1.0 / (1.0 + t_final));
    let j_err = (j - j_oracle).abs();
    let passed = bound_ok && j_err <= 1e-6;
    outcome(
        4,
        "slow-convergence counterexample",
        started,
        passed,
        format!("min(d - bound) = {worst_margin:.3e}; |J - oracle| = {j_err:.3e} (tol 1e-6)"),
    )
}

/// Criterion 5 — algebraic identities on 10⁴ random configurations,
/// `n ∈ {2,…,8}`: the cosecant identity to relative 1e−10 and the
/// minimal-gap drift inequality.
pub fn criterion_5(seed: u64) -> CriterionOutcome {
    let started = Instant::now();
    let mut rng = path_rng(seed, 5);
    let mut worst_rel = 0.0f64;
    let mut worst_gap_slack = f64::INFINITY;
    let total = 10_000;
    for trial in 0..total {
        let n = 2 + trial % 7;
        let config = loop {
            let mut angles: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..2.0 * PI)).collect();
            angles.sort_by(|a, b| a.partial_cmp(b).unwrap());
            if let Ok(cfg) = AngleConfiguration::new(angles) {
                if cfg.min_gap() >= 1e-3 {
                    break cfg;
                }
            }
        };
        let (_, psi) = repulsion_psi(&config).unwrap();
        let phi_sq: f64 = (0..n)
            .map(|j| crate::circle::interaction_drift(&config, j, 4.0).unwrap().powi(2))
            .sum();
        let nn = n as f64;
        let identity = phi_sq + nn * (nn * nn - 1.0) / 3.0;
        worst_rel = worst_rel.max((psi - identity).abs() / psi);
        for (lhs, rhs) in gap_bound_check(&config) {
            worst_gap_slack = worst_gap_slack.min(lhs - rhs).min(rhs + 1e-12);
        }
    }
    let passed = worst_rel <= 1e-10 && worst_gap_slack >= -1e-9;
    outcome(
        5,
        "cosecant identity and gap inequality",
        started,
        passed,
        format!(
            "max rel identity error = {worst_rel:.3e} (tol 1e-10); min inequality slack = {worst_gap_slack:.3e}"
        ),
    )
}

/// Coefficients of one smooth trigonometric test path on `n` coordinates.
struct TrigPath {
    base: Vec<f64>,
    /// `(amplitude, angular frequency, phase)` per coordinate and harmonic.
    coeffs: Vec<Vec<(f64, f64, f64)>>,
}

impl TrigPath {
    fn eval(&self, t: f64, j: usize) -> f64 {
        let mut x = self.base[j];
        for &(amp, omega, phase) in &self.coeffs[j] {
            x += amp * (omega * t + phase).sin();
        }
        x
    }

    fn sample(&self, t_final: f64, h: f64) -> DrivingPath<f64> {
        DrivingPath::from_fn(self.base.len(), t_final, h, |t, j| self.eval(t, j))
    }
}

/// Twenty gentle three-particle paths: equally spaced bases with small
/// offsets, two low-frequency harmonics per coordinate.
fn smooth_suite(seed: u64) -> Vec<TrigPath> {
    let mut rng = path_rng(seed, 6);
    (0..20)
        .map(|_| {
            let n = 3;
            let base: Vec<f64> = (0..n)
                .map(|j| j as f64 * 2.0 * PI / n as f64 + rng.random_range(-0.1f64..0.1))
                .collect();
            let coeffs = (0..n)
                .map(|_| {
                    (1..=2)
                        .map(|m| {
                            (
                                rng.random_range(-0.08f64..0.08) / m as f64,
                                PI / 2.0 * m as f64,
                                rng.random_range(0.0..2.0 * PI),
                            )
                        })
                        .collect()
                })
                .collect();
            TrigPath { base, coeffs }
        })
        .collect()
}

/// Criterion 6 — energy decomposition `|J − (E − Φ⁰)| ≤ 1e−6 (1+J)` on the
/// smooth suite at step 1e−3, with the residual decaying at h → h/2.
pub fn criterion_6(seed: u64) -> CriterionOutcome {
    let started = Instant::now();
    let mut worst_rel = 0.0f64;
    let mut worst_decay = f64::NEG_INFINITY;
    for tp in smooth_suite(seed) {
        let p = tp.sample(1.0, 1e-3);
        let j = multiradial_energy(&p, 4.0, 0.0);
        let res = decomposition_check(&p, 4.0).abs();
        worst_rel = worst_rel.max(res / (1.0 + j));
        let res_half = decomposition_check(&tp.sample(1.0, 5e-4), 4.0).abs();
        // confirms at least first-order decay (quadratic in practice)
        worst_decay = worst_decay.max(res_half - 0.75 * res - 1e-13);
    }
    let passed = worst_rel <= 1e-6 && worst_decay <= 0.0;
    outcome(
        6,
        "energy decomposition J = E - Phi0",
        started,
        passed,
        format!("max |residual|/(1+J) = {worst_rel:.3e} (tol 1e-6); decay margin = {worst_decay:.3e}"),
    )
}

/// Criterion 7 — the two algebraic routes to `Φ^{κ,a}` agree to relative
/// 1e−6 on the smooth suite for `κ ∈ {0, 0.5, 1}`, `a = 4`.
pub fn criterion_7(seed: u64) -> CriterionOutcome {
    let started = Instant::now();
    let mut worst = 0.0f64;
    for tp in smooth_suite(seed) {
        let p = tp.sample(1.0, 1e-3);
        for kappa in [0.0, 0.5, 1.0] {
            let direct = phi_functional(&p, kappa, 4.0);
            let via_identity = phi_functional_identity(&p, kappa, 4.0);
            worst = worst.max((direct - via_identity).abs() / direct.abs().max(1.0));
        }
    }
    let passed = worst <= 1e-6;
    outcome(
        7,
        "two routes to the interaction functional",
        started,
        passed,
        format!("max rel disagreement = {worst:.3e} (tol 1e-6)"),
    )
}

fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Criterion 8 — Girsanov consistency: weighted-Brownian and direct-SDE
/// estimates of five bounded path functionals agree within 3 combined
/// standard errors; mean weight matches the direct survival probability.
pub fn criterion_8(seed: u64) -> CriterionOutcome {
    let started = Instant::now();
    let theta0 = AngleConfiguration::new(vec![0.0, PI]).unwrap();
    let mut cfg = SimulationConfig::new(theta0, 1.0, 4.0, 0.5, 5e-4);
    cfg.ensemble = 20_000;
    cfg.seed = seed.wrapping_add(8);

    let functionals: [(&str, fn(&DrivingPath<f64>) -> f64); 5] = [
        ("cos gap_T", |p| (p.final_state()[1] - p.final_state()[0]).cos()),
        ("exp(-(gap_T-pi)^2)", |p| {
            (-((p.final_state()[1] - p.final_state()[0]) - PI).powi(2)).exp()
        }),
        ("cos displacement", |p| (p.final_state()[0] - p.initial()[0]).cos()),
        ("exp(-sup|gap-pi|)", |p| {
            let sup = (0..p.len())
                .map(|i| ((p.state(i)[1] - p.state(i)[0]) - PI).abs())
                .fold(0.0f64, f64::max);
            (-sup).exp()
        }),
        ("sin(gap_T/2)", |p| ((p.final_state()[1] - p.final_state()[0]) / 2.0).sin()),
    ];

    let direct = simulate_dyson(&cfg);
    let weighted = simulate_weighted(&cfg).unwrap();
    let weights = weighted.weights.as_ref().unwrap();

    let mut passed = true;
    let mut details = Vec::new();
    for (name, f) in functionals {
        let direct_vals: Vec<f64> = direct
            .paths
            .iter()
            .filter(|p| p.terminated_at().is_none())
            .map(f)
            .collect();
        let (md, sed) = mean_and_se(&direct_vals);
        let weighted_vals: Vec<f64> = weighted
            .paths
            .iter()
            .zip(weights)
            .map(|(p, &w)| if p.terminated_at().is_none() { w * f(p) } else { 0.0 })
            .collect();
        let (mw, sew) = mean_and_se(&weighted_vals);
        let gap = (md - mw).abs();
        let limit = 3.0 * (sed * sed + sew * sew).sqrt();
        if gap > limit {
            passed = false;
            details.push(format!("{name}: |{md:.5} - {mw:.5}| > 3SE {limit:.5}"));
        }
    }

    // total mass: weighted mean of the constant functional is 1 within 3 SE
    let (mass, mass_se) = mean_and_se(weights);
    if (mass - 1.0).abs() > 3.0 * mass_se {
        passed = false;
        details.push(format!("unit mass violated: {mass:.5} +- {mass_se:.5}"));
    }

    // mean weight restricted to non-collided paths vs direct survival
    let survival = direct.paths.iter().filter(|p| p.terminated_at().is_none()).count() as f64
        / cfg.ensemble as f64;
    let surv_se = (survival * (1.0 - survival) / cfg.ensemble as f64).sqrt();
    let restricted: Vec<f64> = weighted
        .paths
        .iter()
        .zip(weights)
        .map(|(p, &w)| if p.terminated_at().is_none() { w } else { 0.0 })
        .collect();
    let (mw_restricted, sew) = mean_and_se(&restricted);
    let gap = (mw_restricted - survival).abs();
    let limit = 3.0 * (sew * sew + surv_se * surv_se).sqrt().max(1e-6);
    if gap > limit {
        passed = false;
        details.push(format!(
            "survival mismatch: weight mass {mw_restricted:.5} vs survival {survival:.5}"
        ));
    }

    let elapsed = started.elapsed().as_secs_f64();
    let passed = passed && elapsed < 60.0;
    let detail = if details.is_empty() {
        format!("5 functionals within 3 combined SE; weight mass {mass:.4}; survival {survival:.4}")
    } else {
        details.join("; ")
    };
    outcome(8, "Girsanov consistency (two estimators)", started, passed, detail)
}

/// Criterion 9 — collision tail bound across the `(κ, ε)` grid: the exact
/// binomial upper confidence limit of the hit probability stays below
/// `exp(a n(n²−1)T/24) (ε/(2F(θ_0)))^{a/κ}`.
///
/// Ensembles auto-scale per cell (the tightest cell needs ~1.9·10⁸ paths
/// for its zero-hit certificate), so the sampling step is a deliberately
/// coarse 0.05 to fit the single-core budget; the cells with observable
/// hits pass with more than an order of magnitude of slack.
pub fn criterion_9(seed: u64) -> CriterionOutcome {
    let started = Instant::now();
    let theta0 = AngleConfiguration::new(vec![0.0, PI]).unwrap();
    let mut cfg = SimulationConfig::new(theta0, 1.0, 4.0, 0.5, 0.05);
    cfg.seed = seed.wrapping_add(9);
    let rows = tail_bound_check(&[0.2, 0.3], &[0.5, 1.0, 2.0], &cfg, 0.05, 20_000).unwrap();
    let passed = rows.iter().all(|r| r.pass);
    let detail = rows
        .iter()
        .map(|r| {
            format!(
                "k={} eps={}: {}/{} hits, ci_hi {:.3e} vs bound {:.3e} [{}]",
                r.kappa,
                r.eps,
                r.hits,
                r.ensemble,
                r.ci_hi,
                r.bound,
                if r.pass { "ok" } else { "VIOLATED" }
            )
        })
        .collect::<Vec<_>>()
        .join("; ");
    outcome(9, "collision tail bound", started, passed, detail)
}

/// Root of `(1+s)²/(4s) = c` in `(0, 1)` by bisection.
fn slit_radius_for_capacity(c: f64) -> f64 {
    let f = |s: f64| (1.0 + s).powi(2) / (4.0 * s) - c;
    let (mut lo, mut hi) = (1e-12, 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Criterion 10 — Loewner slit oracles: the constant-driver trace endpoint,
/// the capacity normalization, and the three-chord pizza-pie configuration
/// against the cubed-map symmetrization.
pub fn criterion_10() -> CriterionOutcome {
    let started = Instant::now();
    let lam = WeightFunction::constant(1.0);
    let mut passed = true;
    let mut details = Vec::new();

    // single constant driver: endpoint at T = 1 vs (1+r)^2/(4r) = e
    let p1 = DrivingPath::from_fn(1, 1.0, 1e-3, |_, _| 0.0);
    let tr = trace(&p1, &[1.0], 1e-4, &lam).unwrap();
    let gamma = tr.points[0][0].point;
    let r_oracle = slit_radius_for_capacity(1.0f64.exp());
    let tip_err = (gamma.re - r_oracle).abs().max(gamma.im.abs());
    if tip_err > 1e-3 {
        passed = false;
    }
    details.push(format!("n=1 tip |gamma(1) - {r_oracle:.5}| = {tip_err:.2e} (tol 1e-3)"));

    // capacity normalization for n = 1 and n = 2
    let (m1, e1) = capacity_check(&p1, &lam, 1.0).unwrap();
    let p2 = DrivingPath::from_fn(2, 1.0, 1e-3, |t: f64, j| j as f64 * PI + 0.2 * (3.0 * t).sin());
    let (m2, e2) = capacity_check(&p2, &lam, 1.0).unwrap();
    let cap_err = (m1 - e1).abs().max((m2 - e2).abs());
    if cap_err > 1e-6 {
        passed = false;
    }
    details.push(format!("capacity error = {cap_err:.2e} (tol 1e-6)"));

    // pizza pie: three equally spaced constant drivers at zeta = 0.4, T = 0.5
    let zeta = 0.4;
    let t_pie = 0.5;
    let p3 = DrivingPath::from_fn(3, t_pie, 1e-3, |_, j| zeta + j as f64 * 2.0 * PI / 3.0);
    let tr3 = trace(&p3, &[t_pie], 1e-4, &lam).unwrap();
    let s_oracle = slit_radius_for_capacity((9.0 * t_pie).exp());
    let tip3 = s_oracle.cbrt();
    let mut ang_dev = 0.0f64;
    let mut tip_dev = 0.0f64;
    for (j, chord) in tr3.points.iter().enumerate() {
        let g = chord[0].point;
        let target = zeta + j as f64 * 2.0 * PI / 3.0;
        let mut diff = g.im.atan2(g.re) - target;
        while diff > PI {
            diff -= 2.0 * PI;
        }
        while diff < -PI {
            diff += 2.0 * PI;
        }
        ang_dev = ang_dev.max(diff.abs());
        tip_dev = tip_dev.max((g.norm() - tip3).abs());
    }
    if ang_dev > 1e-6 || tip_dev > 1e-3 {
        passed = false;
    }
    details.push(format!(
        "pizza-pie angular dev = {ang_dev:.2e} (tol 1e-6), tip dev = {tip_dev:.2e} (tol 1e-3)"
    ));

    let elapsed = started.elapsed().as_secs_f64();
    let passed = passed && elapsed < 30.0;
    outcome(10, "Loewner slit-map oracles", started, passed, details.join("; "))
}

/// Random single-chord trigonometric driver with prescribed energy.
fn random_trig_driver(rng: &mut impl Rng, energy_target: f64, h: f64) -> DrivingPath<f64> {
    let coeffs: Vec<(f64, f64)> = (1..=3)
        .map(|_| (rng.random_range(-1.0f64..1.0), rng.random_range(-1.0f64..1.0)))
        .collect();
    let eval = |t: f64, c: &[(f64, f64)]| -> f64 {
        c.iter()
            .enumerate()
            .map(|(m, &(a, b))| {
                let omega = 2.0 * PI * (m + 1) as f64;
                a * (omega * t).sin() + b * ((omega * t).cos() - 1.0)
            })
            .sum()
    };
    let raw = DrivingPath::from_fn(1, 1.0, h, |t, _| eval(t, &coeffs));
    // quadrature energy scales exactly quadratically under amplitude scaling
    let scale = (energy_target / dirichlet_energy(&raw)).sqrt();
    DrivingPath::from_fn(1, 1.0, h, |t, _| scale * eval(t, &coeffs))
}

/// Criterion 11 — finite-energy derivative bound
/// `|f_t'(θ_t + iy)| ≤ exp(½ sup(1/λ) E_T)` with zero violations over 100
/// random drivers, and variational vs finite-difference agreement.
pub fn criterion_11(seed: u64) -> CriterionOutcome {
    let started = Instant::now();
    let mut rng = path_rng(seed, 11);
    let mut violations = 0usize;
    let mut worst_ratio = 0.0f64;
    let mut worst_fd = 0.0f64;
    for idx in 0..100 {
        let energy_target = rng.random_range(0.5f64..4.0);
        let p = random_trig_driver(&mut rng, energy_target, 2e-3);
        let lam = if idx % 2 == 0 {
            WeightFunction::constant(1.0)
        } else {
            WeightFunction::new(
                vec![0.0, 0.5, 1.0],
                vec![
                    rng.random_range(0.5f64..2.0),
                    rng.random_range(0.5f64..2.0),
                    rng.random_range(0.5f64..2.0),
                ],
                WeightKind::PiecewiseLinear,
            )
            .unwrap()
        };
        for k in 1..=10 {
            let t = k as f64 / 10.0;
            for y in [1e-2, 1e-3, 1e-4] {
                let (df, bound) = trace_derivative_bound(&p, &lam, t, y).unwrap();
                worst_ratio = worst_ratio.max(df / bound);
                if df > bound * (1.0 + 1e-9) {
                    violations += 1;
                }
            }
        }
        if idx < 10 {
            // variational vs centered finite difference on a shared grid
            let mut buf = [0.0];
            p.state_at(1.0, &mut buf).unwrap();
            let y = 1e-3;
            let w = num_complex::Complex::new(buf[0], y);
            let (variational, fd) = backward_derivative_pair(&p, &lam, 1.0, w, y / 300.0);
            let rel = (variational - fd).norm() / variational.norm();
            worst_fd = worst_fd.max(rel);
        }
    }
    let passed = violations == 0 && worst_fd <= 1e-5;
    outcome(
        11,
        "derivative bound for finite-energy drivers",
        started,
        passed,
        format!(
            "violations {violations}/3000, max |f'|/bound = {worst_ratio:.4}, max FD rel err = {worst_fd:.2e} (tol 1e-5)"
        ),
    )
}

/// Criterion 12 — LDP trend for the sup-ball around the zero-energy flow:
/// `κ log P̂` increases toward 0 along κ ∈ {1, 0.5, 0.25, 0.125} with final
/// value ≥ −0.15, and the rate minimizer certifies `J* ≤ 1e−6`.
pub fn criterion_12(seed: u64) -> CriterionOutcome {
    let started = Instant::now();
    let theta0 = AngleConfiguration::new(vec![0.0, PI]).unwrap();
    let center = DrivingPath::from_fn(2, 0.5, 1e-2, |_, j| j as f64 * PI);
    let event = EventSpec::SupBall { center, radius: 0.5 };

    let mut cfg = SimulationConfig::new(theta0.clone(), 1.0, 4.0, 0.5, 1e-3);
    cfg.seed = seed.wrapping_add(12);
    let kappas = [1.0, 0.5, 0.25, 0.125];
    let curve = mc_ldp_curve(&event, &kappas, &[20_000; 4], &cfg, 1).unwrap();
    let values: Vec<f64> = curve.iter().map(|pt| pt.direct.value).collect();
    let monotone = values.windows(2).all(|w| w[1] > w[0]);
    let final_ok = *values.last().unwrap() >= -0.15 && *values.last().unwrap() <= 0.0;

    let minimum = minimize_rate(&event, &theta0, 0.5, 200, 4.0, 0.0, MinimizeOptions::default());
    let (rate_ok, j_star) = match &minimum {
        Ok(r) => (r.value <= 1e-6, r.value),
        Err(_) => (false, f64::NAN),
    };

    let elapsed = started.elapsed().as_secs_f64();
    let passed = monotone && final_ok && rate_ok && elapsed < 120.0;
    let series = values.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>().join(" -> ");
    outcome(
        12,
        "LDP trend toward -inf J = 0",
        started,
        passed,
        format!(
            "kappa*log P = [{series}] (monotone: {monotone}, final >= -0.15: {final_ok}); J* = {j_star:.2e}"
        ),
    )
}

/// Criterion 13 — rate-optimizer oracle: the single-particle endpoint
/// problem reproduces `J* = c²/(2T)` to relative 1e−3, and the analytic
/// gradient of the discretized objective matches finite differences.
pub fn criterion_13(seed: u64) -> CriterionOutcome {
    let started = Instant::now();
    let mut passed = true;
    let mut details = Vec::new();
    for c in [0.5f64, 1.0] {
        let theta0 = AngleConfiguration::new(vec![0.0]).unwrap();
        let target = AngleConfiguration::new(vec![c]).unwrap();
        let event = EventSpec::EndpointSet { target, radius: 1e-9 };
        match minimize_rate(&event, &theta0, 1.0, 200, 4.0, 0.0, MinimizeOptions::default()) {
            Ok(result) => {
                let oracle = c * c / 2.0;
                let rel = (result.value - oracle).abs() / oracle;
                // the optimizer must not undercut the true infimum either
                if rel > 1e-3 || result.value < oracle - 1e-6 {
                    passed = false;
                }
                details.push(format!("c={c}: J* = {:.6} (rel err {rel:.2e})", result.value));
            }
            Err(e) => {
                passed = false;
                details.push(format!("c={c}: {e}"));
            }
        }
    }

    // analytic gradient vs central differences at a random path point
    let theta0 = AngleConfiguration::new(vec![0.05, 2.1, 4.2]).unwrap();
    let obj = RateObjective::new(&theta0, 1.0, 10, 4.0, 0.0);
    let mut rng = path_rng(seed, 13);
    let mut x = Vec::new();
    for i in 1..=10 {
        for j in 0..3 {
            x.push(theta0.angles()[j] + 0.05 * i as f64 / 10.0 * rng.random_range(-1.0f64..1.0));
        }
    }
    let mut grad = vec![0.0; x.len()];
    obj.gradient(&x, &mut grad);
    let mut worst = 0.0f64;
    for k in 0..x.len() {
        let h = 1e-6;
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[k] += h;
        xm[k] -= h;
        let fd = (obj.value(&xp) - obj.value(&xm)) / (2.0 * h);
        worst = worst.max((fd - grad[k]).abs() / (1.0 + grad[k].abs()));
    }
    if worst > 1e-5 {
        passed = false;
    }
    details.push(format!("max gradient FD rel err = {worst:.2e} (tol 1e-5)"));
    outcome(13, "rate optimizer oracle", started, passed, details.join("; "))
}

/// Criterion 14 — reproducibility: the artifact writer run twice with the
/// same seed produces byte-identical CSV/JSON files.
pub fn criterion_14(seed: u64) -> CriterionOutcome {
    let started = Instant::now();
    let run = |dir: &Path| -> std::io::Result<Vec<(PathBuf, Vec<u8>)>> {
        std::fs::create_dir_all(dir)?;
        let files = write_check_artifacts(dir, seed)?;
        files.into_iter().map(|f| std::fs::read(&f).map(|bytes| (f, bytes))).collect()
    };
    let base = std::env::temp_dir().join(format!("mrlab-check-{seed}-{}", std::process::id()));
    let result = (|| -> std::io::Result<(bool, String)> {
        let a = run(&base.join("a"))?;
        let b = run(&base.join("b"))?;
        let mut same = a.len() == b.len();
        let mut which = String::new();
        for ((fa, ba), (fb, bb)) in a.iter().zip(&b) {
            if fa.file_name() != fb.file_name() || ba != bb {
                same = false;
                which = format!("{:?}", fa.file_name());
                break;
            }
        }
        let detail = format!(
            "{} artifacts compared{}",
            a.len(),
            if same { String::new() } else { format!("; first difference in {which}") }
        );
        Ok((same, detail))
    })();
    let _ = std::fs::remove_dir_all(&base);
    match result {
        Ok((passed, detail)) => outcome(14, "byte-identical reruns", started, passed, detail),
        Err(e) => outcome(14, "byte-identical reruns", started, false, format!("io error: {e}")),
    }
}

/// Writes the deterministic CSV/JSON/SVG artifacts of a `check` run into
/// `dir` and returns the paths, in a fixed order.
pub fn write_check_artifacts(dir: &Path, seed: u64) -> std::io::Result<Vec<PathBuf>> {
    let mut files = Vec::new();

    // zero-energy flow path and its convergence report
    let theta0 = AngleConfiguration::new(vec![0.0, PI / 2.0]).unwrap();
    let flow = zero_energy_flow(&theta0, 3.0, 1e-3, 4.0, 0.0).unwrap();
    let flow_csv = dir.join("flow_n2.csv");
    flow.write_csv(std::fs::File::create(&flow_csv)?)?;
    files.push(flow_csv);
    let per = multiradial_energy_intervals(&flow, 4.0, 0.0).unwrap_or_default();
    let mut cumulative = Vec::with_capacity(flow.len());
    cumulative.push(0.0);
    for (i, c) in per.iter().enumerate() {
        let prev = cumulative[i];
        cumulative.push(prev + c);
    }
    let report = convergence_report(&flow, Some(&cumulative));
    let report_json = dir.join("flow_report.json");
    std::fs::write(&report_json, serde_json::to_string_pretty(&report)?)?;
    files.push(report_json);

    // energy report of one smooth path
    let tp = &smooth_suite(seed)[0];
    let energy_json = dir.join("energy_smooth.json");
    std::fs::write(
        &energy_json,
        serde_json::to_string_pretty(&energy_report(&tp.sample(1.0, 1e-3), 0.5, 4.0, 0.0))?,
    )?;
    files.push(energy_json);

    // a small LDP curve table
    let theta0 = AngleConfiguration::new(vec![0.0, PI]).unwrap();
    let center = DrivingPath::from_fn(2, 0.5, 1e-2, |_, j| j as f64 * PI);
    let event = EventSpec::SupBall { center, radius: 0.5 };
    let mut cfg = SimulationConfig::new(theta0.clone(), 1.0, 4.0, 0.5, 2e-3);
    cfg.seed = seed.wrapping_add(140);
    let curve =
        mc_ldp_curve(&event, &[0.5, 0.25], &[2000, 2000], &cfg, 1).expect("artifact event valid");
    let curve_csv = dir.join("ldp_curve.csv");
    write_ldp_curve_csv(&curve, std::fs::File::create(&curve_csv)?)?;
    files.push(curve_csv);

    // a small tail table (the cheap cells only)
    let mut tail_cfg = SimulationConfig::new(theta0, 1.0, 4.0, 0.5, 0.01);
    tail_cfg.seed = seed.wrapping_add(141);
    let rows =
        tail_bound_check(&[0.2, 0.3], &[1.0, 2.0], &tail_cfg, 0.05, 10_000).expect("κ ≤ a holds");
    let tail_csv = dir.join("tail_table.csv");
    write_tail_table_csv(&rows, std::fs::File::create(&tail_csv)?)?;
    files.push(tail_csv);

    // a single-chord trace with CSV and SVG renderings
    let p1 = DrivingPath::from_fn(1, 1.0, 1e-3, |_, _| 0.0);
    let lam = WeightFunction::constant(1.0);
    let times: Vec<f64> = (0..=20).map(|k| k as f64 * 0.05).collect();
    let tr = trace(&p1, &times, 1e-4, &lam).expect("constant driver");
    let trace_csv = dir.join("trace_n1.csv");
    write_trace_csv(&tr, std::fs::File::create(&trace_csv)?)?;
    files.push(trace_csv);
    let trace_svg = dir.join("trace_n1.svg");
    crate::svg::render_trace(&tr, std::fs::File::create(&trace_svg)?)?;
    files.push(trace_svg);

    Ok(files)
}

/// CSV rows `kappa,estimate,ci_lo,ci_hi,method` for an LDP curve.
pub fn write_ldp_curve_csv<W: std::io::Write>(
    curve: &[LdpCurvePoint<f64>],
    mut w: W,
) -> std::io::Result<()> {
    writeln!(w, "kappa,estimate,ci_lo,ci_hi,method")?;
    for pt in curve {
        for (est, method) in [(&pt.direct, "direct"), (&pt.weighted, "weighted")] {
            let tag = if est.point { method.to_string() } else { format!("{method}-upper-bound") };
            writeln!(w, "{},{},{},{},{tag}", pt.kappa, est.value, est.ci_lo, est.ci_hi)?;
        }
    }
    Ok(())
}

/// CSV rows of a tail-bound table.
pub fn write_tail_table_csv<W: std::io::Write>(
    rows: &[TailRow<f64>],
    mut w: W,
) -> std::io::Result<()> {
    writeln!(w, "kappa,eps,ensemble,hits,p_hat,ci_hi,bound,degenerate,pass")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            r.kappa, r.eps, r.ensemble, r.hits, r.p_hat, r.ci_hi, r.bound, r.degenerate, r.pass
        )?;
    }
    Ok(())
}

/// CSV rows `chord,t,re,im` of a trace.
pub fn write_trace_csv<W: std::io::Write>(
    tr: &LoewnerTrace<f64>,
    mut w: W,
) -> std::io::Result<()> {
    writeln!(w, "chord,t,re,im")?;
    for (j, chord) in tr.points.iter().enumerate() {
        for p in chord {
            writeln!(w, "{},{},{},{}", j + 1, p.t, p.point.re, p.point.im)?;
        }
    }
    Ok(())
}

/// CSV rows `re,im,tau` of a hull cloud.
pub fn write_hull_csv<W: std::io::Write>(
    cloud: &[crate::loewner::HullPoint<f64>],
    mut w: W,
) -> std::io::Result<()> {
    writeln!(w, "re,im,tau")?;
    for p in cloud {
        writeln!(w, "{},{},{}", p.re, p.im, p.tau)?;
    }
    Ok(())
}
