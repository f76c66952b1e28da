//! Empirical large-deviation laboratory.
//!
//! Two complementary tools:
//!
//! * [`minimize_rate`] minimizes the discretized multiradial energy
//!   `J^{a,ρ}` over grid paths with fixed start, subject to an event
//!   constraint, by penalty-augmented Barzilai–Borwein descent with exact
//!   analytic gradients and a final feasibility projection;
//! * [`mc_ldp_curve`] and [`tail_bound_check`] estimate `κ log P[event]`
//!   by direct simulation and by the Girsanov-reweighted ensemble, with
//!   binomial / delta-method confidence intervals.
//!
//! The discretized objective uses the same midpoint quadrature as the
//! energy module, so its minimum over feasible grid paths is the
//! quadrature-level rate; its gradient is assembled from
//! `∂(2φ_a^j)/∂θ^p`, a cosecant-type pairwise sum.

use crate::circle::{
    gap_at, gap_stats_raw, min_gap_raw, phi_j_raw, vandermonde_f_raw, AngleConfiguration,
};
use crate::float::{csc2, Scalar};
use crate::flow::zero_energy_flow;
use crate::path::DrivingPath;
use crate::sde::{
    detect_stop_times, eps_hit_count, simulate_dyson_with_workers,
    simulate_weighted_with_workers, SimulationConfig,
};
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LdpError {
    #[error("event is infeasible from the given start: {0}")]
    Infeasible(String),
    #[error("invalid event parameters: {0}")]
    BadEvent(String),
    #[error("tail bound requires κ ≤ a (got κ = {kappa}, a = {a})")]
    KappaAboveA { kappa: f64, a: f64 },
}

/// Path events measured by the laboratory.
#[derive(Debug, Clone)]
pub enum EventSpec<S> {
    /// `sup_t |θ_t − c_t|₂ ≤ radius` around a center path.
    SupBall { center: DrivingPath<S>, radius: S },
    /// Final state within `radius` (Euclidean) of a target configuration.
    EndpointSet { target: AngleConfiguration<S>, radius: S },
    /// The smallest gap drops below `eps` no later than `t_final`.
    EpsGapHit { eps: S, t_final: S },
}

impl<S: Scalar> EventSpec<S> {
    fn validate(&self, n: usize) -> Result<(), LdpError> {
        match self {
            EventSpec::SupBall { radius, center } => {
                if !(*radius > S::zero()) {
                    return Err(LdpError::BadEvent("radius must be positive".into()));
                }
                if center.n() != n {
                    return Err(LdpError::BadEvent("center dimension mismatch".into()));
                }
            }
            EventSpec::EndpointSet { radius, target } => {
                if !(*radius > S::zero()) {
                    return Err(LdpError::BadEvent("radius must be positive".into()));
                }
                if target.n() != n {
                    return Err(LdpError::BadEvent("target dimension mismatch".into()));
                }
            }
            EventSpec::EpsGapHit { eps, .. } => {
                let cap = S::two_pi() / S::from_usize(n).unwrap();
                if !(*eps > S::zero()) || !(*eps < cap) {
                    return Err(LdpError::BadEvent(format!(
                        "eps must lie in (0, 2π/n); got {eps}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Whether a sampled path realizes the event. Collided paths never do.
    pub fn holds(&self, path: &DrivingPath<S>) -> bool {
        if path.terminated_at().is_some() {
            return false;
        }
        match self {
            EventSpec::SupBall { center, radius } => {
                let mut buf = vec![S::zero(); path.n()];
                for i in 0..path.len() {
                    let t = path.times()[i];
                    if center.state_at(t, &mut buf).is_err() {
                        return false;
                    }
                    let mut acc = S::zero();
                    for (x, c) in path.state(i).iter().zip(&buf) {
                        let d = *x - *c;
                        acc += d * d;
                    }
                    if acc.sqrt() > *radius {
                        return false;
                    }
                }
                true
            }
            EventSpec::EndpointSet { target, radius } => {
                let mut acc = S::zero();
                for (x, c) in path.final_state().iter().zip(target.angles()) {
                    let d = *x - *c;
                    acc += d * d;
                }
                acc.sqrt() <= *radius
            }
            EventSpec::EpsGapHit { eps, t_final } => {
                let (_, tau_eps) = detect_stop_times(path, *eps);
                tau_eps <= *t_final
            }
        }
    }
}

/// Discretized multiradial energy over interior grid states, exposed so the
/// analytic gradient can be validated against finite differences.
///
/// Variables are the states `θ_1, …, θ_N` at `t_i = i·h` (the start `θ_0`
/// is fixed), flattened row-major: `x[(i−1)·n + j] = θ_i^j`.
pub struct RateObjective<S> {
    theta0: Vec<S>,
    n: usize,
    steps: usize,
    h: S,
    a: S,
    rho: S,
}

impl<S: Scalar> RateObjective<S> {
    pub fn new(theta0: &AngleConfiguration<S>, t_final: S, steps: usize, a: S, rho: S) -> Self {
        Self {
            theta0: theta0.angles().to_vec(),
            n: theta0.n(),
            steps,
            h: t_final / S::from_usize(steps).unwrap(),
            a,
            rho,
        }
    }

    pub fn dims(&self) -> usize {
        self.n * self.steps
    }

    pub fn grid_times(&self) -> Vec<S> {
        (0..=self.steps).map(|i| self.h * S::from_usize(i).unwrap()).collect()
    }

    fn state<'a>(&'a self, x: &'a [S], i: usize) -> &'a [S] {
        if i == 0 {
            &self.theta0
        } else {
            &x[(i - 1) * self.n..i * self.n]
        }
    }

    /// Quadrature value `½ Σ_i h Σ_j (v_i^j − 2φ_a^j(m_i) − ρ)²`.
    pub fn value(&self, x: &[S]) -> S {
        let half = S::lit(0.5);
        let half_a = self.a * half;
        let mut total = S::zero();
        let mut mid = vec![S::zero(); self.n];
        for i in 0..self.steps {
            let (s0, s1) = (self.state(x, i), self.state(x, i + 1));
            for j in 0..self.n {
                mid[j] = (s0[j] + s1[j]) * half;
            }
            let mut sq = S::zero();
            for j in 0..self.n {
                let v = (s1[j] - s0[j]) / self.h;
                let r = v - half_a * phi_j_raw(&mid, j) - self.rho;
                sq += r * r;
            }
            total += half * self.h * sq;
        }
        total
    }

    /// Analytic gradient of [`Self::value`]; `grad` has length [`Self::dims`].
    pub fn gradient(&self, x: &[S], grad: &mut [S]) {
        let half = S::lit(0.5);
        let quarter_a = self.a * S::lit(0.25);
        let half_a = self.a * half;
        for g in grad.iter_mut() {
            *g = S::zero();
        }
        let n = self.n;
        let mut mid = vec![S::zero(); n];
        let mut r = vec![S::zero(); n];
        let mut w = vec![S::zero(); n];
        for i in 0..self.steps {
            let (s0, s1) = (self.state(x, i), self.state(x, i + 1));
            for j in 0..n {
                mid[j] = (s0[j] + s1[j]) * half;
            }
            for j in 0..n {
                let v = (s1[j] - s0[j]) / self.h;
                r[j] = v - half_a * phi_j_raw(&mid, j) - self.rho;
            }
            // w = M r with M_jp = ∂(2φ_a^j)/∂θ^p at the midpoint: symmetric,
            // off-diagonal (a/4)csc², diagonal −(a/4)Σcsc².
            for wj in w.iter_mut() {
                *wj = S::zero();
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let c = quarter_a * csc2((mid[p] - mid[q]) * half);
                    w[p] += c * (r[q] - r[p]);
                    w[q] += c * (r[p] - r[q]);
                }
            }
            // dJ over the interval: the velocity part contributes ±r to the
            // endpoint states, the drift part −(h/2)·w to both.
            let hw = self.h * half;
            if i >= 1 {
                let g = &mut grad[(i - 1) * n..i * n];
                for j in 0..n {
                    g[j] += -r[j] - hw * w[j];
                }
            }
            let g = &mut grad[i * n..(i + 1) * n];
            for j in 0..n {
                g[j] += r[j] - hw * w[j];
            }
        }
    }

    /// Assembles the grid path for a variable vector.
    pub fn to_path(&self, x: &[S]) -> DrivingPath<S> {
        let mut states = Vec::with_capacity((self.steps + 1) * self.n);
        states.extend_from_slice(&self.theta0);
        states.extend_from_slice(x);
        DrivingPath::from_raw(self.grid_times(), states, self.n, None)
    }
}

/// Result of a rate minimization.
#[derive(Debug, Clone)]
pub struct RateResult<S> {
    pub path: DrivingPath<S>,
    /// Minimal discretized energy `J*` over the feasible set.
    pub value: S,
    pub iterations: usize,
    pub grad_norm: S,
    pub feasible: bool,
}

struct Penalty<'a, S> {
    event: &'a EventSpec<S>,
    /// Event center resampled onto the optimization grid (sup-ball only).
    center_on_grid: Option<Vec<S>>,
    times: Vec<S>,
    n: usize,
}

impl<'a, S: Scalar> Penalty<'a, S> {
    fn new(event: &'a EventSpec<S>, obj: &RateObjective<S>) -> Result<Self, LdpError> {
        let times = obj.grid_times();
        let center_on_grid = match event {
            EventSpec::SupBall { center, .. } => {
                let mut flat = Vec::with_capacity(times.len() * obj.n);
                let mut buf = vec![S::zero(); obj.n];
                for &t in &times {
                    center
                        .state_at(t, &mut buf)
                        .map_err(|e| LdpError::BadEvent(format!("center too short: {e}")))?;
                    flat.extend_from_slice(&buf);
                }
                Some(flat)
            }
            _ => None,
        };
        Ok(Self { event, center_on_grid, times, n: obj.n })
    }

    /// `½ dist²` to the event set; the gradient (times `mu`) is added into
    /// `grad` when present.
    fn accumulate(&self, theta0: &[S], x: &[S], mu: S, grad: Option<&mut [S]>) -> S {
        let n = self.n;
        let steps = x.len() / n;
        let state = |i: usize| -> &[S] {
            if i == 0 {
                theta0
            } else {
                &x[(i - 1) * n..i * n]
            }
        };
        let mut value = S::zero();
        let mut grad_buf = vec![S::zero(); x.len()];
        match self.event {
            EventSpec::SupBall { radius, .. } => {
                let c = self.center_on_grid.as_ref().expect("built in new");
                for i in 1..=steps {
                    let s = state(i);
                    let ci = &c[i * n..(i + 1) * n];
                    let mut acc = S::zero();
                    for j in 0..n {
                        let d = s[j] - ci[j];
                        acc += d * d;
                    }
                    let d = acc.sqrt();
                    if d > *radius {
                        let excess = d - *radius;
                        value += S::lit(0.5) * excess * excess;
                        for j in 0..n {
                            grad_buf[(i - 1) * n + j] = excess * (s[j] - ci[j]) / d;
                        }
                    }
                }
            }
            EventSpec::EndpointSet { target, radius } => {
                let s = state(steps);
                let mut acc = S::zero();
                for j in 0..n {
                    let d = s[j] - target.angles()[j];
                    acc += d * d;
                }
                let d = acc.sqrt();
                if d > *radius {
                    let excess = d - *radius;
                    value += S::lit(0.5) * excess * excess;
                    for j in 0..n {
                        grad_buf[(steps - 1) * n + j] = excess * (s[j] - target.angles()[j]) / d;
                    }
                }
            }
            EventSpec::EpsGapHit { eps, t_final } => {
                // distance is how far the closest-approach gap stays above ε
                let mut best = S::infinity();
                let mut at = (0usize, 0usize);
                for i in 0..=steps {
                    if self.times[i] > *t_final {
                        break;
                    }
                    let stats = gap_stats_raw(state(i));
                    if stats.delta_min < best {
                        best = stats.delta_min;
                        at = (i, stats.argmin[0]);
                    }
                }
                if best > *eps {
                    let excess = best - *eps;
                    value += S::lit(0.5) * excess * excess;
                    let (i, j) = at;
                    if i >= 1 {
                        // ∂gap_j/∂θ = e_{j+1 mod n} − e_j
                        let row = &mut grad_buf[(i - 1) * n..i * n];
                        row[(j + 1) % n] += excess;
                        row[j] -= excess;
                    }
                }
            }
        }
        if let Some(g) = grad {
            for (gi, pi) in g.iter_mut().zip(&grad_buf) {
                *gi += mu * *pi;
            }
        }
        value
    }

    /// Exact projection of the variables onto the event set.
    fn project(&self, _theta0: &[S], x: &mut [S]) {
        let n = self.n;
        let steps = x.len() / n;
        // pull strictly inside: the slack must dominate the rounding noise
        // of recomputing distances on O(1) coordinates
        let slack = |radius: S| (radius * S::lit(1e-9)).max(S::lit(1e-13));
        match self.event {
            EventSpec::SupBall { radius, .. } => {
                let c = self.center_on_grid.as_ref().expect("built in new");
                for i in 1..=steps {
                    let ci = &c[i * n..(i + 1) * n];
                    let row = &mut x[(i - 1) * n..i * n];
                    let mut acc = S::zero();
                    for j in 0..n {
                        let d = row[j] - ci[j];
                        acc += d * d;
                    }
                    let d = acc.sqrt();
                    if d > *radius {
                        let scale = (*radius - slack(*radius)).max(S::zero()) / d;
                        for j in 0..n {
                            row[j] = ci[j] + (row[j] - ci[j]) * scale;
                        }
                    }
                }
            }
            EventSpec::EndpointSet { target, radius } => {
                let row = &mut x[(steps - 1) * n..steps * n];
                let mut acc = S::zero();
                for j in 0..n {
                    let d = row[j] - target.angles()[j];
                    acc += d * d;
                }
                let d = acc.sqrt();
                if d > *radius {
                    let scale = (*radius - slack(*radius)).max(S::zero()) / d;
                    for j in 0..n {
                        row[j] = target.angles()[j] + (row[j] - target.angles()[j]) * scale;
                    }
                }
            }
            EventSpec::EpsGapHit { eps, t_final } => {
                let mut best = S::infinity();
                let mut at = None;
                for i in 1..=steps {
                    if self.times[i] > *t_final {
                        break;
                    }
                    let stats = gap_stats_raw(&x[(i - 1) * n..i * n]);
                    if stats.delta_min < best {
                        best = stats.delta_min;
                        at = Some((i, stats.argmin[0]));
                    }
                }
                if best > *eps {
                    if let Some((i, j)) = at {
                        // squeeze the minimal gap symmetrically to just below
                        // ε; adjacent gaps only grow, so ordering is kept
                        let row = &mut x[(i - 1) * n..i * n];
                        let shift = (best - (*eps - slack(*eps))) * S::lit(0.5);
                        row[j] += shift;
                        row[(j + 1) % n] -= shift;
                    }
                }
            }
        }
    }
}

/// Options of the penalty/descent loop.
#[derive(Debug, Clone, Copy)]
pub struct MinimizeOptions {
    pub max_iterations: usize,
    pub grad_tol: f64,
    pub penalty_stages: [f64; 3],
    pub perturbed_starts: usize,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        Self {
            max_iterations: 30_000,
            grad_tol: 1e-10,
            penalty_stages: [1e2, 1e4, 1e6],
            perturbed_starts: 2,
        }
    }
}

/// Penalty-augmented projected descent on the discretized rate function.
///
/// Multi-start: the zero-energy flow from `θ_0`, a straight-line candidate
/// aimed at the event, and sinusoidal perturbations of the flow.
pub fn minimize_rate<S: Scalar>(
    event: &EventSpec<S>,
    theta0: &AngleConfiguration<S>,
    t_final: S,
    grid_steps: usize,
    a: S,
    rho: S,
    opts: MinimizeOptions,
) -> Result<RateResult<S>, LdpError> {
    event.validate(theta0.n())?;
    let obj = RateObjective::new(theta0, t_final, grid_steps, a, rho);
    let penalty = Penalty::new(event, &obj)?;

    // Infeasibility that no path can repair: a sup-ball whose center does
    // not contain the fixed initial state.
    if let EventSpec::SupBall { center, radius } = event {
        let mut acc = S::zero();
        for (x, c) in theta0.angles().iter().zip(center.initial()) {
            let d = *x - *c;
            acc += d * d;
        }
        if acc.sqrt() > *radius {
            return Err(LdpError::Infeasible(format!(
                "initial state sits {} away from the ball center",
                acc.sqrt()
            )));
        }
    }

    let starts = build_starts(&obj, event, theta0, t_final, grid_steps, a, rho, opts);
    let mut best: Option<RateResult<S>> = None;
    for x0 in starts {
        let run = descend(&obj, &penalty, theta0.angles(), x0, opts);
        let better = match &best {
            None => true,
            Some(b) => {
                (run.feasible && !b.feasible)
                    || (run.feasible == b.feasible && run.value < b.value)
            }
        };
        if better {
            best = Some(run);
        }
    }
    let best = best.expect("at least one start");
    if !best.feasible {
        return Err(LdpError::Infeasible(format!(
            "no feasible path found; best value {}",
            best.value
        )));
    }
    Ok(best)
}

#[allow(clippy::too_many_arguments)]
fn build_starts<S: Scalar>(
    obj: &RateObjective<S>,
    event: &EventSpec<S>,
    theta0: &AngleConfiguration<S>,
    t_final: S,
    grid_steps: usize,
    a: S,
    rho: S,
    opts: MinimizeOptions,
) -> Vec<Vec<S>> {
    let n = theta0.n();
    let times = obj.grid_times();
    let mut starts = Vec::new();

    // 1. the zero-energy flow (resampled onto the optimization grid)
    let step = (t_final / S::from_usize(grid_steps).unwrap()).min(S::lit(1e-2));
    if let Ok(flow) = zero_energy_flow(theta0, t_final, step, a, rho) {
        if let Ok(resampled) = flow.resample(&times) {
            let mut x = Vec::with_capacity(obj.dims());
            for i in 1..=grid_steps {
                x.extend_from_slice(resampled.state(i));
            }
            starts.push(x);
        }
    }

    // 2. straight-line candidate aimed at the event
    let target_state: Option<Vec<S>> = match event {
        EventSpec::EndpointSet { target, .. } => Some(target.angles().to_vec()),
        EventSpec::SupBall { center, .. } => Some(center.final_state().to_vec()),
        EventSpec::EpsGapHit { eps, .. } => {
            // squeeze the smallest initial gap down to ε·(1 − 1e−3)
            let stats = gap_stats_raw(theta0.angles());
            let j = stats.argmin[0];
            let mut s = theta0.angles().to_vec();
            let shift = (gap_at(&s, j) - *eps * S::lit(0.999)) * S::lit(0.5);
            s[j] += shift;
            s[(j + 1) % n] -= shift;
            Some(s)
        }
    };
    if let Some(target) = target_state {
        let mut x = Vec::with_capacity(obj.dims());
        for i in 1..=grid_steps {
            let w = S::from_usize(i).unwrap() / S::from_usize(grid_steps).unwrap();
            for j in 0..n {
                x.push(theta0.angles()[j] + (target[j] - theta0.angles()[j]) * w);
            }
        }
        if states_ordered(&x, n) {
            starts.push(x);
        }
    }

    // 3. sinusoidal perturbations of the first start
    if let Some(base) = starts.first().cloned() {
        for k in 0..opts.perturbed_starts {
            let amp = S::lit(0.02) * S::from_usize(k + 1).unwrap();
            let freq = S::PI() * S::from_usize(k + 1).unwrap() / t_final;
            let mut x = base.clone();
            for i in 1..=grid_steps {
                let bump = amp * (freq * times[i]).sin();
                for j in 0..n {
                    x[(i - 1) * n + j] +=
                        bump * S::from_usize(j + 1).unwrap() / S::from_usize(n).unwrap();
                }
            }
            if states_ordered(&x, n) {
                starts.push(x);
            }
        }
    }
    starts
}

fn states_ordered<S: Scalar>(x: &[S], n: usize) -> bool {
    x.chunks_exact(n)
        .all(|s| (1..n).all(|j| s[j] > s[j - 1]) && (n < 2 || s[n - 1] - s[0] < S::two_pi()))
}

/// Barzilai–Borwein descent with a penalty schedule and final projection.
fn descend<S: Scalar>(
    obj: &RateObjective<S>,
    penalty: &Penalty<'_, S>,
    theta0: &[S],
    mut x: Vec<S>,
    opts: MinimizeOptions,
) -> RateResult<S> {
    let dims = x.len();
    let mut grad = vec![S::zero(); dims];
    let mut prev_x = vec![S::zero(); dims];
    let mut prev_g = vec![S::zero(); dims];
    let mut iterations = 0;
    let mut grad_norm = S::infinity();

    let eval = |x: &[S], grad: &mut [S], mu: S| -> S {
        obj.gradient(x, grad);
        let j = obj.value(x);
        j + mu * penalty.accumulate(theta0, x, mu, Some(grad))
    };

    for &mu_stage in &opts.penalty_stages {
        let mu = S::lit(mu_stage);
        let mut f = eval(&x, &mut grad, mu);
        let mut alpha = S::lit(1e-4);
        let per_stage = opts.max_iterations / opts.penalty_stages.len();
        for _ in 0..per_stage {
            iterations += 1;
            grad_norm = grad.iter().map(|g| *g * *g).sum::<S>().sqrt();
            if grad_norm <= S::lit(opts.grad_tol) * (S::one() + f.abs()) {
                break;
            }
            prev_x.copy_from_slice(&x);
            prev_g.copy_from_slice(&grad);
            for (xi, gi) in x.iter_mut().zip(&grad) {
                *xi -= alpha * *gi;
            }
            let f_new = eval(&x, &mut grad, mu);
            if !f_new.is_finite() || f_new > f + f.abs() + S::one() {
                // reject the step and restart with a shorter one
                x.copy_from_slice(&prev_x);
                grad.copy_from_slice(&prev_g);
                alpha *= S::lit(0.25);
                continue;
            }
            f = f_new;
            let mut ss = S::zero();
            let mut sy = S::zero();
            for i in 0..dims {
                let s = x[i] - prev_x[i];
                let y = grad[i] - prev_g[i];
                ss += s * s;
                sy += s * y;
            }
            alpha = if sy > S::zero() {
                (ss / sy).min(S::lit(10.0)).max(S::lit(1e-12))
            } else {
                alpha * S::lit(2.0)
            };
        }
    }

    penalty.project(theta0, &mut x);
    let value = obj.value(&x);
    let path = obj.to_path(&x);
    let feasible = penalty.event.holds(&path);
    RateResult { path, value, iterations, grad_norm, feasible }
}

/// Point estimate (or one-sided bound) of `κ log P` with its confidence
/// interval on the same scale.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Estimate<S> {
    /// `false` when no mass was observed and only a one-sided upper bound
    /// on `κ log P` is reported.
    pub point: bool,
    pub value: S,
    pub ci_lo: S,
    pub ci_hi: S,
}

/// Estimates of `κ log P[event]` at one κ.
#[derive(Debug, Clone, Serialize)]
pub struct LdpCurvePoint<S> {
    pub kappa: S,
    pub direct: Estimate<S>,
    pub weighted: Estimate<S>,
    pub direct_hits: u64,
    pub ensemble: usize,
}

/// Direct and importance-sampled estimates of `κ log P[event]` along a κ
/// grid; `ensembles[i]` paths are used at `kappa_list[i]`.
pub fn mc_ldp_curve<S: Scalar>(
    event: &EventSpec<S>,
    kappa_list: &[S],
    ensembles: &[usize],
    base: &SimulationConfig<S>,
    workers: usize,
) -> Result<Vec<LdpCurvePoint<S>>, LdpError>
where
    StandardNormal: Distribution<S>,
{
    event.validate(base.n())?;
    if kappa_list.iter().any(|k| !(*k > S::zero()))
        || kappa_list.windows(2).any(|w| !(w[1] < w[0]))
    {
        return Err(LdpError::BadEvent("kappa list must be positive and decreasing".into()));
    }
    if kappa_list.len() != ensembles.len() {
        return Err(LdpError::BadEvent("one ensemble size per kappa".into()));
    }
    let z = S::lit(1.96);
    let mut out = Vec::with_capacity(kappa_list.len());
    for (idx, (&kappa, &ensemble)) in kappa_list.iter().zip(ensembles).enumerate() {
        let mut cfg = base.clone();
        cfg.kappa = kappa;
        cfg.ensemble = ensemble;
        cfg.seed = base.seed.wrapping_add(idx as u64);

        // direct
        let ens = simulate_dyson_with_workers(&cfg, workers);
        let hits = ens.paths.iter().filter(|p| event.holds(p)).count() as u64;
        let n_f = S::from_usize(ensemble).unwrap();
        let direct = if hits == 0 {
            let upper = S::lit(binomial_upper_ci(ensemble as u64, 0, 0.05));
            Estimate {
                point: false,
                value: kappa * upper.ln(),
                ci_lo: S::neg_infinity(),
                ci_hi: kappa * upper.ln(),
            }
        } else {
            let p_hat = S::from_u64(hits).unwrap() / n_f;
            let (lo, hi) = wilson_interval(hits, ensemble as u64, 1.96);
            Estimate {
                point: true,
                value: kappa * p_hat.ln(),
                ci_lo: kappa * S::lit(lo).ln(),
                ci_hi: kappa * S::lit(hi).ln(),
            }
        };

        // importance-sampled through the Brownian representation
        let wens = simulate_weighted_with_workers(&cfg, workers)
            .map_err(|e| LdpError::BadEvent(format!("weighted scheme: {e}")))?;
        let weights = wens.weights.as_ref().expect("weighted ensemble");
        let mut mean = S::zero();
        for (p, &w) in wens.paths.iter().zip(weights) {
            if event.holds(p) {
                mean += w;
            }
        }
        mean /= n_f;
        let mut var = S::zero();
        for (p, &w) in wens.paths.iter().zip(weights) {
            let contrib = if event.holds(p) { w } else { S::zero() };
            var += (contrib - mean) * (contrib - mean);
        }
        var /= n_f * (n_f - S::one());
        let se = var.sqrt();
        let weighted = if mean > S::zero() {
            Estimate {
                point: true,
                value: kappa * mean.ln(),
                ci_lo: kappa * (mean - z * se).max(S::lit(1e-300)).ln(),
                ci_hi: kappa * (mean + z * se).ln(),
            }
        } else {
            let upper = S::lit(binomial_upper_ci(ensemble as u64, 0, 0.05));
            Estimate {
                point: false,
                value: kappa * upper.ln(),
                ci_lo: S::neg_infinity(),
                ci_hi: kappa * upper.ln(),
            }
        };

        out.push(LdpCurvePoint { kappa, direct, weighted, direct_hits: hits, ensemble });
    }
    Ok(out)
}

/// One cell of the tail-bound table.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TailRow<S> {
    pub kappa: S,
    pub eps: S,
    pub ensemble: u64,
    pub hits: u64,
    pub p_hat: S,
    /// One-sided exact binomial upper confidence limit for `P[τ_ε ≤ T]`.
    pub ci_hi: S,
    /// `exp(a n(n²−1) T / 24) · (ε / (2F(θ_0)))^{a/κ}`.
    pub bound: S,
    /// `ε ≥ Δ(θ_0)`: the stopping time is 0 and the cell is excluded.
    pub degenerate: bool,
    pub pass: bool,
}

/// Empirical check of the gap tail bound
/// `P^{κ,a}[τ_ε ≤ T] ≤ C e^{−I/κ}` with `C = exp(a n(n²−1) T/24)` and
/// `I = −a log(ε/(2F(θ_0)))`, by direct streaming simulation.
///
/// Requires `κ ≤ a` for every κ in the grid. Ensembles scale per cell like
/// `max(min_ensemble, ⌈3.1/bound⌉)` so that a zero-hit cell's exact upper
/// confidence limit (level `alpha`) sits below its bound with some margin.
pub fn tail_bound_check<S: Scalar>(
    eps_grid: &[S],
    kappa_grid: &[S],
    cfg: &SimulationConfig<S>,
    alpha: f64,
    min_ensemble: u64,
) -> Result<Vec<TailRow<S>>, LdpError>
where
    StandardNormal: Distribution<S>,
{
    let n_f = S::from_usize(cfg.n()).unwrap();
    let f0 = vandermonde_f_raw(cfg.theta0.angles(), S::one());
    let c_const = (cfg.a * n_f * (n_f * n_f - S::one()) * cfg.t_final / S::lit(24.0)).exp();
    let delta0 = min_gap_raw(cfg.theta0.angles());
    let mut rows = Vec::with_capacity(eps_grid.len() * kappa_grid.len());
    for &kappa in kappa_grid {
        if kappa > cfg.a {
            return Err(LdpError::KappaAboveA {
                kappa: kappa.to_f64().unwrap_or(f64::NAN),
                a: cfg.a.to_f64().unwrap_or(f64::NAN),
            });
        }
        for &eps in eps_grid {
            let bound = c_const * (eps / (S::lit(2.0) * f0)).powf(cfg.a / kappa);
            if eps >= delta0 {
                rows.push(TailRow {
                    kappa,
                    eps,
                    ensemble: 0,
                    hits: 0,
                    p_hat: S::one(),
                    ci_hi: S::one(),
                    bound,
                    degenerate: true,
                    pass: true,
                });
                continue;
            }
            let needed = (3.1 / bound.to_f64().unwrap()).ceil() as u64;
            let ensemble = min_ensemble.max(needed);
            let hits = eps_hit_count(
                &cfg.theta0, kappa, cfg.a, cfg.t_final, cfg.dt, eps, cfg.seed, ensemble,
            );
            let p_hat = S::from_u64(hits).unwrap() / S::from_u64(ensemble).unwrap();
            let ci_hi = S::lit(binomial_upper_ci(ensemble, hits, alpha));
            rows.push(TailRow {
                kappa,
                eps,
                ensemble,
                hits,
                p_hat,
                ci_hi,
                bound,
                degenerate: false,
                pass: ci_hi <= bound,
            });
        }
    }
    Ok(rows)
}

/// Wilson score interval for a binomial proportion.
pub fn wilson_interval(hits: u64, n: u64, z: f64) -> (f64, f64) {
    let n = n as f64;
    let p = hits as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// One-sided exact (Clopper–Pearson) upper confidence limit: the `u` with
/// `P[Bin(n, u) ≤ hits] = alpha`.
pub fn binomial_upper_ci(n: u64, hits: u64, alpha: f64) -> f64 {
    assert!(n > 0 && hits <= n);
    if hits == n {
        return 1.0;
    }
    if hits == 0 {
        // (1 − u)^n = α
        return 1.0 - alpha.powf(1.0 / n as f64);
    }
    let log_cdf = |u: f64| -> f64 {
        // log Σ_{j≤hits} C(n,j) u^j (1−u)^{n−j} via the term recurrence
        let lr = (u / (1.0 - u)).ln();
        let mut term = n as f64 * (-u).ln_1p();
        let mut max_term = term;
        let mut terms = vec![term];
        for j in 0..hits {
            term += ((n - j) as f64 / (j + 1) as f64).ln() + lr;
            terms.push(term);
            max_term = max_term.max(term);
        }
        max_term + terms.iter().map(|t| (t - max_term).exp()).sum::<f64>().ln()
    };
    let (mut lo, mut hi) = (hits as f64 / n as f64, 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if log_cdf(mid) > alpha.ln() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn gradient_matches_finite_differences() {
        let theta0 = AngleConfiguration::new(vec![0.1, 2.0, 4.1]).unwrap();
        let obj = RateObjective::new(&theta0, 1.0, 8, 4.0, 0.3);
        let mut x = Vec::new();
        for i in 1..=8 {
            let t = i as f64 / 8.0;
            for j in 0..3 {
                x.push(theta0.angles()[j] + 0.1 * t * ((j + 1) as f64 * 1.3).sin());
            }
        }
        let mut grad = vec![0.0; x.len()];
        obj.gradient(&x, &mut grad);
        let fd_step = 1e-6;
        for k in 0..x.len() {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[k] += fd_step;
            xm[k] -= fd_step;
            let fd = (obj.value(&xp) - obj.value(&xm)) / (2.0 * fd_step);
            let scale = 1.0 + grad[k].abs();
            assert!(
                (fd - grad[k]).abs() / scale < 1e-5,
                "coordinate {k}: fd {fd} vs analytic {}",
                grad[k]
            );
        }
    }

    #[test]
    fn endpoint_problem_matches_euler_lagrange() {
        // n = 1 pure Dirichlet: J* = c²/(2T), minimizer linear
        let theta0 = AngleConfiguration::new(vec![0.0]).unwrap();
        let c = 1.0;
        let t_final = 1.0;
        let target = AngleConfiguration::new(vec![c]).unwrap();
        let event = EventSpec::EndpointSet { target, radius: 1e-9 };
        let result =
            minimize_rate(&event, &theta0, t_final, 50, 4.0, 0.0, MinimizeOptions::default())
                .unwrap();
        assert!(result.feasible);
        assert_abs_diff_eq!(result.value, c * c / (2.0 * t_final), epsilon = 1e-4);
        for (i, &t) in result.path.times().iter().enumerate() {
            assert_abs_diff_eq!(result.path.state(i)[0], c * t / t_final, epsilon = 1e-3);
        }
    }

    #[test]
    fn equally_spaced_copies_endpoint_shift() {
        // n equally spaced copies, common shift c: J* = n c²/(2T)
        let n = 3;
        let c = 0.5;
        let theta0 = AngleConfiguration::equally_spaced(n, 0.0);
        let target = theta0.rotated(c);
        let event = EventSpec::EndpointSet { target, radius: 1e-9 };
        let result =
            minimize_rate(&event, &theta0, 1.0, 40, 4.0, 0.0, MinimizeOptions::default()).unwrap();
        assert!(result.feasible);
        assert_abs_diff_eq!(result.value, n as f64 * c * c / 2.0, epsilon = 2e-3);
    }

    #[test]
    fn unconstrained_ball_minimum_is_zero() {
        let theta0 = AngleConfiguration::equally_spaced(2, 0.0);
        let center = DrivingPath::from_fn(2, 0.5, 0.01, |_, j| j as f64 * PI);
        let event = EventSpec::SupBall { center, radius: 0.5 };
        let result =
            minimize_rate(&event, &theta0, 0.5, 50, 4.0, 0.0, MinimizeOptions::default()).unwrap();
        assert!(result.feasible);
        assert!(result.value <= 1e-6, "J* = {}", result.value);
        let flow = DrivingPath::from_fn(2, 0.5, 0.01, |_, j| j as f64 * PI)
            .resample(result.path.times())
            .unwrap();
        assert!(crate::path::sup_distance(&result.path, &flow).unwrap() < 1e-3);
    }

    #[test]
    fn infeasible_ball_is_reported() {
        let theta0 = AngleConfiguration::equally_spaced(2, 0.0);
        let center = DrivingPath::from_fn(2, 0.5, 0.01, |_, j| j as f64 * PI + 2.0);
        let event = EventSpec::SupBall { center, radius: 0.3 };
        assert!(matches!(
            minimize_rate(&event, &theta0, 0.5, 20, 4.0, 0.0, MinimizeOptions::default()),
            Err(LdpError::Infeasible(_))
        ));
    }

    #[test]
    fn eps_gap_hit_feasibility_and_projection() {
        let theta0 = AngleConfiguration::new(vec![0.0, PI]).unwrap();
        let event = EventSpec::EpsGapHit { eps: 0.4, t_final: 1.0 };
        let result =
            minimize_rate(&event, &theta0, 1.0, 40, 4.0, 0.0, MinimizeOptions::default()).unwrap();
        assert!(result.feasible);
        assert!(result.value.is_finite() && result.value > 0.0);
        let (_, tau_eps) = detect_stop_times(&result.path, 0.4);
        assert!(tau_eps <= 1.0);
    }

    #[test]
    fn binomial_upper_ci_values() {
        // zero hits: closed form 1 − α^{1/n}
        let u = binomial_upper_ci(1000, 0, 0.05);
        assert_abs_diff_eq!(u, 1.0 - 0.05f64.powf(1e-3), epsilon = 1e-12);
        // one hit out of 100 at 5%: exact CP upper ≈ 0.0466
        let u = binomial_upper_ci(100, 1, 0.05);
        assert_abs_diff_eq!(u, 0.04656, epsilon = 2e-4);
        assert!(binomial_upper_ci(100, 2, 0.05) > u);
    }

    #[test]
    fn wilson_interval_contains_p_hat() {
        let (lo, hi) = wilson_interval(30, 100, 1.96);
        assert!(lo < 0.3 && 0.3 < hi);
        assert!(lo > 0.2 && hi < 0.42);
    }

    #[test]
    fn event_holds_on_simple_paths() {
        let center = DrivingPath::from_fn(2, 1.0, 0.1, |_, j| j as f64 * PI);
        let event = EventSpec::SupBall { center: center.clone(), radius: 0.2 };
        assert!(event.holds(&center));
        let shifted = center.rotated(0.2);
        assert!(!event.holds(&shifted)); // distance 0.2·√2 > 0.2
    }

    #[test]
    fn tail_rows_detect_degenerate_eps() {
        let theta0 = AngleConfiguration::new(vec![0.0, PI]).unwrap();
        let mut cfg = SimulationConfig::new(theta0, 1.0, 4.0, 0.2, 0.02);
        cfg.seed = 2;
        let rows = tail_bound_check(&[PI + 0.1], &[1.0], &cfg, 0.05, 100).unwrap();
        assert!(rows[0].degenerate && rows[0].pass);
        // κ > a rejected
        assert!(tail_bound_check(&[0.2], &[8.0], &cfg, 0.05, 100).is_err());
    }
}
