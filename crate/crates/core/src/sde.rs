//! Euler–Maruyama simulation of the interacting diffusion
//!
//! ```text
//! dU^j = (a/2) Σ_{k≠j} cot((U^j − U^k)/2) dt + ρ dt + √κ dW^j
//! ```
//!
//! and of its Girsanov-reweighted Brownian representation
//! `U = θ_0 + √κ B` with weight `exp(Φ^{κ,a}_T / κ)`.
//!
//! The direct scheme substeps adaptively near small gaps, where the
//! cotangent drift blows up: a (sub)step of size `h` is halved whenever
//! `h·a·|cot(g/2)| > g/4` for the smallest gap `g`, and a proposed step that
//! breaks the cyclic ordering is rejected and retried at half size. After
//! 2¹⁰ halvings the path is declared collided; the continuous process never
//! crosses, so such events are discretization artifacts and their frequency
//! is reported on the ensemble.

use crate::circle::{is_singular_raw, min_gap_raw, AngleConfiguration};
use crate::energy::phi_functional;
use crate::float::{cot, Scalar};
use crate::path::DrivingPath;
use crate::rng::path_rng;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SdeError {
    #[error("κ must be positive for the reweighted scheme")]
    NonpositiveKappa,
    #[error("reweighted scheme requires κ ≤ 2a (got κ = {kappa}, a = {a})")]
    KappaOutOfWindow { kappa: f64, a: f64 },
    #[error("time step and horizon must be positive")]
    BadGrid,
}

/// Gap-adaptive substepping parameters.
#[derive(Debug, Clone, Copy)]
pub struct SubstepPolicy {
    /// Maximal number of recursive halvings before a path is declared
    /// collided.
    pub max_halvings: u32,
}

impl Default for SubstepPolicy {
    fn default() -> Self {
        Self { max_halvings: 10 }
    }
}

/// Full description of one simulation run.
#[derive(Debug, Clone)]
pub struct SimulationConfig<S> {
    pub theta0: AngleConfiguration<S>,
    pub kappa: S,
    pub a: S,
    pub rho: S,
    pub t_final: S,
    pub dt: S,
    pub seed: u64,
    pub ensemble: usize,
    pub substep: SubstepPolicy,
    /// When set, the first hitting time of `min gap < ε` is recorded per path.
    pub eps_stop: Option<S>,
}

impl<S: Scalar> SimulationConfig<S> {
    pub fn new(theta0: AngleConfiguration<S>, kappa: S, a: S, t_final: S, dt: S) -> Self {
        Self {
            theta0,
            kappa,
            a,
            rho: S::zero(),
            t_final,
            dt,
            seed: 0,
            ensemble: 1,
            substep: SubstepPolicy::default(),
            eps_stop: None,
        }
    }

    pub fn n(&self) -> usize {
        self.theta0.n()
    }
}

/// Ensemble of simulated paths with their stopping data.
#[derive(Debug, Clone)]
pub struct StoppedEnsemble<S> {
    pub paths: Vec<DrivingPath<S>>,
    /// Collision time per path; `+∞` when the path survived to `T`.
    pub collision_times: Vec<S>,
    /// First time `min gap < ε` per path (`+∞` if never); present when the
    /// configuration requested it.
    pub eps_hit_times: Option<Vec<S>>,
    /// Girsanov weights; present for reweighted ensembles.
    pub weights: Option<Vec<S>>,
    /// Paths terminated by the substep cap rather than a clean collision
    /// sample; spurious terminations are tracked, not hidden.
    pub substep_cap_hits: usize,
}

enum StepOutcome {
    Done,
    Collided,
}

struct Stepper<S> {
    a: S,
    rho: S,
    kappa: S,
    max_halvings: u32,
}

impl<S: Scalar> Stepper<S>
where
    StandardNormal: Distribution<S>,
{
    /// Advances `state` by `h`, substepping as needed. `drift` and
    /// `proposal` are scratch buffers of length `n`.
    fn advance<R: Rng>(
        &self,
        state: &mut [S],
        h: S,
        depth: u32,
        rng: &mut R,
        drift: &mut [S],
        proposal: &mut [S],
    ) -> StepOutcome {
        let n = state.len();
        let half = S::lit(0.5);
        // Split when h·a·|cot(g/2)| > g/4 for the smallest gap g. Since
        // |cot(g/2)| ≤ 2/g on (0, π], the test can only fire for
        // g² < 8·a·h, which skips the cotangent on the common path.
        let mut needs_split = false;
        if n == 2 {
            let gap01 = state[1] - state[0];
            let g = gap01.min(S::two_pi() - gap01);
            if g * g < S::lit(8.0) * self.a * h {
                needs_split = h * self.a * cot(g * half).abs() > g * S::lit(0.25);
            }
            if !needs_split {
                // one cotangent serves both coordinates
                let c = self.a * half * cot((state[0] - state[1]) * half);
                drift[0] = c + self.rho;
                drift[1] = -c + self.rho;
            }
        } else if n > 1 {
            let g = min_gap_raw(state);
            if g * g < S::lit(8.0) * self.a * h {
                needs_split = h * self.a * cot(g * half).abs() > g * S::lit(0.25);
            }
            if !needs_split {
                drift_pairwise(state, self.a, self.rho, drift);
            }
        } else {
            drift[0] = self.rho;
        }
        if !needs_split {
            let noise_scale = (self.kappa * h).sqrt();
            for j in 0..n {
                let z: S = rng.sample(StandardNormal);
                proposal[j] = state[j] + h * drift[j] + noise_scale * z;
            }
            if ordered(proposal) {
                state.copy_from_slice(proposal);
                return StepOutcome::Done;
            }
        }
        self.split(state, h, depth, rng, drift, proposal)
    }

    /// Halves a rejected or singular step into two fresh-noise substeps.
    fn split<R: Rng>(
        &self,
        state: &mut [S],
        h: S,
        depth: u32,
        rng: &mut R,
        drift: &mut [S],
        proposal: &mut [S],
    ) -> StepOutcome {
        if depth >= self.max_halvings {
            return StepOutcome::Collided;
        }
        let sub = h * S::lit(0.5);
        match self.advance(state, sub, depth + 1, rng, drift, proposal) {
            StepOutcome::Done => self.advance(state, sub, depth + 1, rng, drift, proposal),
            StepOutcome::Collided => StepOutcome::Collided,
        }
    }
}

fn ordered<S: Scalar>(state: &[S]) -> bool {
    let n = state.len();
    for j in 1..n {
        if !(state[j] > state[j - 1]) {
            return false;
        }
    }
    n < 2 || state[n - 1] - state[0] < S::two_pi()
}

/// Drift `(a/2) Σ cot(·) + ρ` accumulated pairwise: each pair contributes
/// `±(a/2) cot((θ^j − θ^k)/2)`, so one cotangent serves two coordinates.
fn drift_pairwise<S: Scalar>(state: &[S], a: S, rho: S, out: &mut [S]) {
    let n = state.len();
    let half = S::lit(0.5);
    let half_a = a * half;
    for o in out.iter_mut() {
        *o = rho;
    }
    for j in 0..n {
        for k in (j + 1)..n {
            let c = half_a * cot((state[j] - state[k]) * half);
            out[j] += c;
            out[k] -= c;
        }
    }
}

fn grid_times<S: Scalar>(t_final: S, dt: S) -> Vec<S> {
    let count = (t_final / dt).round().to_usize().unwrap().max(1);
    let mut ts: Vec<S> = (0..count).map(|i| dt * S::from_usize(i).unwrap()).collect();
    ts.push(t_final);
    ts
}

struct SimulatedPath<S> {
    path: DrivingPath<S>,
    tau_coll: S,
    tau_eps: S,
    cap_hit: bool,
}

fn simulate_one<S: Scalar>(cfg: &SimulationConfig<S>, index: u64) -> SimulatedPath<S>
where
    StandardNormal: Distribution<S>,
{
    let n = cfg.n();
    let stepper = Stepper {
        a: cfg.a,
        rho: cfg.rho,
        kappa: cfg.kappa,
        max_halvings: cfg.substep.max_halvings,
    };
    let mut rng = path_rng(cfg.seed, index);
    let grid = grid_times(cfg.t_final, cfg.dt);
    let mut state = cfg.theta0.angles().to_vec();
    let mut drift = vec![S::zero(); n];
    let mut proposal = vec![S::zero(); n];
    let mut times = Vec::with_capacity(grid.len());
    let mut states = Vec::with_capacity(grid.len() * n);
    times.push(S::zero());
    states.extend_from_slice(&state);

    let mut tau_coll = S::infinity();
    let mut tau_eps = S::infinity();
    if let Some(eps) = cfg.eps_stop {
        if min_gap_raw(&state) < eps {
            tau_eps = S::zero();
        }
    }
    let mut cap_hit = false;

    for w in grid.windows(2) {
        let (t0, t1) = (w[0], w[1]);
        match stepper.advance(&mut state, t1 - t0, 0, &mut rng, &mut drift, &mut proposal) {
            StepOutcome::Collided => {
                tau_coll = t1;
                cap_hit = true;
                break;
            }
            StepOutcome::Done => {
                times.push(t1);
                states.extend_from_slice(&state);
                if tau_eps.is_infinite() {
                    if let Some(eps) = cfg.eps_stop {
                        if min_gap_raw(&state) < eps {
                            tau_eps = t1;
                        }
                    }
                }
                if is_singular_raw(&state) {
                    tau_coll = t1;
                    break;
                }
            }
        }
    }

    let mut path = DrivingPath::from_raw(times, states, n, None);
    if tau_coll.is_finite() {
        path.set_terminated(tau_coll);
        if tau_eps.is_infinite() && cfg.eps_stop.is_some() {
            tau_eps = tau_coll; // the gap passed below ε on the way down
        }
    }
    SimulatedPath { path, tau_coll, tau_eps, cap_hit }
}

/// Direct Euler–Maruyama ensemble of the interacting diffusion.
pub fn simulate_dyson<S: Scalar>(cfg: &SimulationConfig<S>) -> StoppedEnsemble<S>
where
    StandardNormal: Distribution<S>,
{
    simulate_dyson_with_workers(cfg, 1)
}

/// Same as [`simulate_dyson`] fanned out over `workers` threads; members are
/// keyed by index, so the result is identical for any worker count.
pub fn simulate_dyson_with_workers<S: Scalar>(
    cfg: &SimulationConfig<S>,
    workers: usize,
) -> StoppedEnsemble<S>
where
    StandardNormal: Distribution<S>,
{
    let results = fan_out(cfg.ensemble, workers, |i| simulate_one(cfg, i as u64));
    collect_ensemble(cfg, results, None)
}

/// Brownian ensemble `θ_0 + √κ B` with Girsanov weights `exp(Φ^{κ,a}_T/κ)`.
///
/// Paths that collide before `T` are truncated there and carry weight zero.
pub fn simulate_weighted<S: Scalar>(
    cfg: &SimulationConfig<S>,
) -> Result<StoppedEnsemble<S>, SdeError>
where
    StandardNormal: Distribution<S>,
{
    simulate_weighted_with_workers(cfg, 1)
}

pub fn simulate_weighted_with_workers<S: Scalar>(
    cfg: &SimulationConfig<S>,
    workers: usize,
) -> Result<StoppedEnsemble<S>, SdeError>
where
    StandardNormal: Distribution<S>,
{
    if !(cfg.kappa > S::zero()) {
        return Err(SdeError::NonpositiveKappa);
    }
    if cfg.kappa > S::lit(2.0) * cfg.a {
        return Err(SdeError::KappaOutOfWindow {
            kappa: cfg.kappa.to_f64().unwrap_or(f64::NAN),
            a: cfg.a.to_f64().unwrap_or(f64::NAN),
        });
    }
    if !(cfg.dt > S::zero()) || !(cfg.t_final > S::zero()) {
        return Err(SdeError::BadGrid);
    }
    let results = fan_out(cfg.ensemble, workers, |i| brownian_one(cfg, i as u64));
    let mut weights = Vec::with_capacity(cfg.ensemble);
    for sim in &results {
        weights.push(if sim.path.terminated_at().is_some() {
            S::zero()
        } else {
            girsanov_weight(&sim.path, cfg.kappa, cfg.a).expect("κ validated above")
        });
    }
    Ok(collect_ensemble(cfg, results, Some(weights)))
}

fn brownian_one<S: Scalar>(cfg: &SimulationConfig<S>, index: u64) -> SimulatedPath<S>
where
    StandardNormal: Distribution<S>,
{
    let n = cfg.n();
    let mut rng = path_rng(cfg.seed, index);
    let grid = grid_times(cfg.t_final, cfg.dt);
    let mut state = cfg.theta0.angles().to_vec();
    let mut proposal = vec![S::zero(); n];
    let mut times = Vec::with_capacity(grid.len());
    let mut states = Vec::with_capacity(grid.len() * n);
    times.push(S::zero());
    states.extend_from_slice(&state);

    let mut tau_coll = S::infinity();
    let mut tau_eps = S::infinity();
    for w in grid.windows(2) {
        let h = w[1] - w[0];
        let noise_scale = (cfg.kappa * h).sqrt();
        for j in 0..n {
            let z: S = rng.sample(StandardNormal);
            proposal[j] = state[j] + noise_scale * z;
        }
        if !ordered(&proposal) {
            tau_coll = w[1];
            break;
        }
        state.copy_from_slice(&proposal);
        times.push(w[1]);
        states.extend_from_slice(&state);
        if tau_eps.is_infinite() {
            if let Some(eps) = cfg.eps_stop {
                if min_gap_raw(&state) < eps {
                    tau_eps = w[1];
                }
            }
        }
        if is_singular_raw(&state) {
            tau_coll = w[1];
            break;
        }
    }

    let mut path = DrivingPath::from_raw(times, states, n, None);
    if tau_coll.is_finite() {
        path.set_terminated(tau_coll);
        if tau_eps.is_infinite() && cfg.eps_stop.is_some() {
            tau_eps = tau_coll;
        }
    }
    SimulatedPath { path, tau_coll, tau_eps, cap_hit: false }
}

fn collect_ensemble<S: Scalar>(
    cfg: &SimulationConfig<S>,
    results: Vec<SimulatedPath<S>>,
    weights: Option<Vec<S>>,
) -> StoppedEnsemble<S> {
    let mut paths = Vec::with_capacity(results.len());
    let mut collision_times = Vec::with_capacity(results.len());
    let mut eps_hits = cfg.eps_stop.map(|_| Vec::with_capacity(results.len()));
    let mut cap_hits = 0;
    for sim in results {
        paths.push(sim.path);
        collision_times.push(sim.tau_coll);
        if let Some(v) = eps_hits.as_mut() {
            v.push(sim.tau_eps);
        }
        cap_hits += sim.cap_hit as usize;
    }
    StoppedEnsemble {
        paths,
        collision_times,
        eps_hit_times: eps_hits,
        weights,
        substep_cap_hits: cap_hits,
    }
}

/// Deterministic fan-out over an index range; results merged by index.
fn fan_out<T: Send>(count: usize, workers: usize, job: impl Fn(usize) -> T + Sync) -> Vec<T> {
    if workers <= 1 || count <= 1 {
        return (0..count).map(job).collect();
    }
    let workers = workers.min(count);
    let mut slots: Vec<Option<T>> = (0..count).map(|_| None).collect();
    let chunk = count.div_ceil(workers);
    std::thread::scope(|scope| {
        for (w, slot_chunk) in slots.chunks_mut(chunk).enumerate() {
            let job = &job;
            scope.spawn(move || {
                for (off, slot) in slot_chunk.iter_mut().enumerate() {
                    *slot = Some(job(w * chunk + off));
                }
            });
        }
    });
    slots.into_iter().map(|s| s.expect("all slots filled")).collect()
}

/// Girsanov weight `exp(Φ^{κ,a}_T(θ)/κ)` of a sampled path; zero for paths
/// terminated at a collision (`F^{a/κ} → 0`).
pub fn girsanov_weight<S: Scalar>(path: &DrivingPath<S>, kappa: S, a: S) -> Result<S, SdeError> {
    if !(kappa > S::zero()) {
        return Err(SdeError::NonpositiveKappa);
    }
    if path.terminated_at().is_some() {
        return Ok(S::zero());
    }
    let phi = phi_functional(path, kappa, a);
    Ok((phi / kappa).exp())
}

/// First grid times where the minimal chordal gap collides and where the
/// minimal angular gap drops below `eps`; `+∞` when that never happens.
pub fn detect_stop_times<S: Scalar>(path: &DrivingPath<S>, eps: S) -> (S, S) {
    let mut tau_coll = path.terminated_at().unwrap_or_else(S::infinity);
    let mut tau_eps = S::infinity();
    for i in 0..path.len() {
        let state = path.state(i);
        if tau_eps.is_infinite() && min_gap_raw(state) < eps {
            tau_eps = path.times()[i];
        }
        if is_singular_raw(state) {
            tau_coll = tau_coll.min(path.times()[i]);
            break;
        }
    }
    if tau_eps.is_infinite() {
        tau_eps = tau_eps.min(tau_coll);
    }
    (tau_coll, tau_eps)
}

/// Streaming direct-simulation count of `{τ_ε ≤ T}` over `ensemble` paths;
/// no path storage, same stepping and per-path streams as
/// [`simulate_dyson`]. Used for tail-probability estimates where ensembles
/// are far too large to keep.
pub fn eps_hit_count<S: Scalar>(
    theta0: &AngleConfiguration<S>,
    kappa: S,
    a: S,
    t_final: S,
    dt: S,
    eps: S,
    seed: u64,
    ensemble: u64,
) -> u64
where
    StandardNormal: Distribution<S>,
{
    let n = theta0.n();
    let stepper = Stepper {
        a,
        rho: S::zero(),
        kappa,
        max_halvings: SubstepPolicy::default().max_halvings,
    };
    let steps = (t_final / dt).round().to_usize().unwrap().max(1);
    let mut drift = vec![S::zero(); n];
    let mut proposal = vec![S::zero(); n];
    let mut state = vec![S::zero(); n];
    let mut hits = 0;
    let two_pi = S::two_pi();
    let half = S::lit(0.5);
    let split_gap_sq = S::lit(8.0) * a * dt; // below this, test the criterion
    let noise_scale = (kappa * dt).sqrt();
    let half_a = a * half;
    for index in 0..ensemble {
        let mut rng = path_rng(seed, index);
        state.copy_from_slice(theta0.angles());
        if min_gap_raw(&state) < eps {
            hits += 1;
            continue;
        }
        'path: for i in 0..steps {
            let h = if i + 1 == steps {
                t_final - dt * S::from_usize(i).unwrap()
            } else {
                dt
            };
            // Fast two-particle step mirroring `advance` draw for draw: one
            // cotangent on the accept path, the shared split helper otherwise.
            let outcome = if n == 2 && h == dt {
                let gap01 = state[1] - state[0];
                let g = gap01.min(two_pi - gap01);
                if g * g >= split_gap_sq || h * a * cot(g * half).abs() <= g * S::lit(0.25) {
                    let c = half_a * cot(-gap01 * half);
                    let z0: S = rng.sample(StandardNormal);
                    let z1: S = rng.sample(StandardNormal);
                    let p0 = state[0] + h * c + noise_scale * z0;
                    let p1 = state[1] - h * c + noise_scale * z1;
                    if p1 > p0 && p1 - p0 < two_pi {
                        state[0] = p0;
                        state[1] = p1;
                        StepOutcome::Done
                    } else {
                        stepper.split(&mut state, h, 0, &mut rng, &mut drift, &mut proposal)
                    }
                } else {
                    stepper.split(&mut state, h, 0, &mut rng, &mut drift, &mut proposal)
                }
            } else {
                stepper.advance(&mut state, h, 0, &mut rng, &mut drift, &mut proposal)
            };
            match outcome {
                StepOutcome::Collided => {
                    hits += 1; // the gap passed below ε before colliding
                    break 'path;
                }
                StepOutcome::Done => {}
            }
            if min_gap_raw(&state) < eps {
                hits += 1;
                break 'path;
            }
        }
    }
    hits
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::path::sup_distance;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn base_cfg(n: usize, kappa: f64) -> SimulationConfig<f64> {
        SimulationConfig::new(
            AngleConfiguration::equally_spaced(n, 0.0),
            kappa,
            4.0,
            1.0,
            1e-3,
        )
    }

    #[test]
    fn zero_noise_matches_zero_energy_flow() {
        let theta0 = AngleConfiguration::new(vec![0.1, 2.2, 4.2]).unwrap();
        let mut cfg = SimulationConfig::new(theta0.clone(), 0.0, 4.0, 1.0, 1e-3);
        cfg.ensemble = 1;
        let ens = simulate_dyson(&cfg);
        let flow = crate::flow::zero_energy_flow(&theta0, 1.0, 1e-3, 4.0, 0.0).unwrap();
        let d = sup_distance(&ens.paths[0], &flow).unwrap();
        assert!(d < 1e-4, "EM vs RK4 sup distance {d}");

        // a start with stronger curvature shows the O(dt) error of the
        // explicit scheme: halving dt roughly halves the distance
        let hard = AngleConfiguration::new(vec![0.1, 1.4, 3.3]).unwrap();
        let mut errs = Vec::new();
        for dt in [1e-3, 5e-4] {
            let mut cfg = SimulationConfig::new(hard.clone(), 0.0, 4.0, 1.0, dt);
            cfg.ensemble = 1;
            let ens = simulate_dyson(&cfg);
            let flow = crate::flow::zero_energy_flow(&hard, 1.0, dt, 4.0, 0.0).unwrap();
            errs.push(sup_distance(&ens.paths[0], &flow).unwrap());
        }
        assert!(errs[1] < 0.7 * errs[0], "no first-order decay: {errs:?}");
    }

    #[test]
    fn single_particle_is_pure_brownian() {
        let theta0 = AngleConfiguration::new(vec![0.3]).unwrap();
        let mut cfg = SimulationConfig::new(theta0, 1.7, 4.0, 0.5, 1e-2);
        cfg.seed = 42;
        let ens = simulate_dyson(&cfg);
        // replay the same stream: the path is exactly θ0 + √(κ dt) Σ z
        let mut rng = path_rng(42, 0);
        let p = &ens.paths[0];
        let mut acc = 0.3f64;
        for i in 1..p.len() {
            let h: f64 = p.times()[i] - p.times()[i - 1];
            let z: f64 = rng.sample(StandardNormal);
            acc += (1.7 * h).sqrt() * z;
            assert_eq!(p.state(i)[0], acc);
        }
    }

    #[test]
    fn determinism_and_worker_independence() {
        let mut cfg = base_cfg(3, 1.0);
        cfg.ensemble = 8;
        cfg.seed = 9;
        let a = simulate_dyson_with_workers(&cfg, 1);
        let b = simulate_dyson_with_workers(&cfg, 4);
        for (p, q) in a.paths.iter().zip(&b.paths) {
            assert_eq!(p.times(), q.times());
            for i in 0..p.len() {
                assert_eq!(p.state(i), q.state(i));
            }
        }
    }

    #[test]
    fn ordering_preserved_along_paths() {
        let mut cfg = base_cfg(4, 2.0);
        cfg.ensemble = 16;
        cfg.t_final = 0.5;
        let ens = simulate_dyson(&cfg);
        for p in &ens.paths {
            for i in 0..p.len() {
                let s = p.state(i);
                for j in 1..s.len() {
                    assert!(s[j] > s[j - 1]);
                }
                assert!(s[s.len() - 1] - s[0] < 2.0 * PI);
            }
        }
    }

    #[test]
    fn antipodal_mean_gap_is_symmetric() {
        let theta0 = AngleConfiguration::new(vec![0.0, PI]).unwrap();
        let mut cfg = SimulationConfig::new(theta0, 1.0, 4.0, 1.0, 1e-2);
        cfg.ensemble = 2000;
        cfg.seed = 3;
        let ens = simulate_dyson(&cfg);
        let gaps: Vec<f64> = ens
            .paths
            .iter()
            .filter(|p| p.terminated_at().is_none())
            .map(|p| p.final_state()[1] - p.final_state()[0])
            .collect();
        let mean = gaps.iter().sum::<f64>() / gaps.len() as f64;
        let var = gaps.iter().map(|g| (g - mean).powi(2)).sum::<f64>() / gaps.len() as f64;
        let se = (var / gaps.len() as f64).sqrt();
        assert!((mean - PI).abs() < 3.0 * se.max(1e-3), "mean {mean} se {se}");
    }

    #[test]
    fn girsanov_weight_on_constant_path() {
        // Φ/κ = a n(n²−1) T / 24 = 1 for n = 2, a = 4, T = 1, any κ ≤ 2a
        let p = DrivingPath::from_fn(2, 1.0, 0.01, |_, j| j as f64 * PI);
        let w = girsanov_weight(&p, 0.5, 4.0).unwrap();
        assert_abs_diff_eq!(w, 1.0f64.exp(), epsilon = 1e-9);
        assert!(girsanov_weight(&p, 0.0, 4.0).is_err());
    }

    #[test]
    fn weighted_ensemble_mass_near_one() {
        let theta0 = AngleConfiguration::new(vec![0.0, PI]).unwrap();
        let mut cfg = SimulationConfig::new(theta0, 1.0, 4.0, 0.5, 1e-3);
        cfg.ensemble = 4000;
        cfg.seed = 17;
        let ens = simulate_weighted(&cfg).unwrap();
        let w = ens.weights.as_ref().unwrap();
        let mean = w.iter().sum::<f64>() / w.len() as f64;
        let var = w.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / w.len() as f64;
        let se = (var / w.len() as f64).sqrt();
        assert!((mean - 1.0).abs() < 4.0 * se, "mean weight {mean}, se {se}");
    }

    #[test]
    fn weighted_rejects_bad_kappa() {
        let cfg = base_cfg(2, 9.0);
        assert!(matches!(
            simulate_weighted(&cfg),
            Err(SdeError::KappaOutOfWindow { .. })
        ));
    }

    #[test]
    fn stop_time_detection_on_pinch_path() {
        // θ¹ = 0, θ² = π − 2t on [0, π/2]: τ_ε at (π − ε)/2, collision at π/2
        let t_final = PI / 2.0;
        let step = 1e-4;
        let count = (t_final / step) as usize;
        let mut times = Vec::with_capacity(count + 1);
        let mut states = Vec::with_capacity(count + 1);
        for i in 0..=count {
            let t = if i == count { t_final } else { i as f64 * step };
            times.push(t);
            states.push(vec![0.0, (PI - 2.0 * t).max(1e-14)]);
        }
        let p = DrivingPath::new(times, states).unwrap();
        let (tau_coll, tau_eps) = detect_stop_times(&p, 0.5);
        assert_abs_diff_eq!(tau_eps, (PI - 0.5) / 2.0, epsilon = 2.0 * step);
        assert_abs_diff_eq!(tau_coll, PI / 2.0, epsilon = 2.0 * step);

        // equally spaced constant path never stops
        let c = DrivingPath::from_fn(3, 1.0, 0.1, |_, j| j as f64 * 2.0 * PI / 3.0);
        let (tc, te) = detect_stop_times(&c, 0.5);
        assert!(tc.is_infinite() && te.is_infinite());
    }

    #[test]
    fn eps_hit_counter_matches_path_based_detection() {
        let theta0 = AngleConfiguration::new(vec![0.0, 1.2]).unwrap();
        let mut cfg = SimulationConfig::new(theta0.clone(), 2.0, 4.0, 0.4, 5e-3);
        cfg.ensemble = 300;
        cfg.seed = 5;
        cfg.eps_stop = Some(0.6);
        let ens = simulate_dyson(&cfg);
        let hits_paths = ens
            .eps_hit_times
            .unwrap()
            .iter()
            .filter(|t: &&f64| t.is_finite() && **t <= 0.4)
            .count() as u64;
        let hits_stream = eps_hit_count(&theta0, 2.0, 4.0, 0.4, 5e-3, 0.6, 5, 300);
        assert_eq!(hits_paths, hits_stream);
    }
}
