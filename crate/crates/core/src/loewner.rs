//! Forward and backward multiradial Loewner flows.
//!
//! Everything is integrated in cylinder coordinates: for `z = e^{iu}` with
//! `Im u ≥ 0` (the closed unit disk with the origin at `Im u = +∞`), the
//! weighted multiradial Loewner equation reads
//!
//! ```text
//! ∂_t h_t(u) = λ_t Σ_{j=1}^n cot((h_t(u) − θ^j_t)/2),       h_0(u) = u,
//! ```
//!
//! which is the fully explicit form of the equation; disk-plane quantities
//! are recovered through `exp(i·)`. The common parameterization is `λ ≡ 1`
//! and normalizes the uniformizing map to `log g_t'(0) = n ∫ λ`.
//!
//! * the **forward** flow of boundary and interior points yields swallowing
//!   times and hence hulls `K_T = {z : τ_z ≤ T}`,
//! * the **backward** flow evaluates the inverse map `f_t = h_t^{-1}` just
//!   above a driving angle, which is how traces
//!   `γ^j_t = lim_{y→0} exp(i f_t(θ^j_t + iy))` are extracted,
//! * the backward variational equation gives `|f_t'|`, compared against the
//!   finite-energy derivative bound `exp(½ sup(1/λ) E_T)`.
//!
//! Steps adapt to the cylinder distance from the driving singularities and
//! align with the driver grid and weight-function nodes, so the integrand is
//! smooth inside every step.

use crate::energy::dirichlet_energy;
use crate::float::Scalar;
use crate::path::{DrivingPath, PathError};
use num_complex::Complex;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LoewnerError {
    #[error("weight function must be positive and sampled on an increasing grid: {0}")]
    BadWeight(String),
    #[error("operation requires a single chord (n = 1), got n = {0}")]
    SingleChordOnly(usize),
    #[error("time {0} outside the driver's horizon")]
    BeyondHorizon(String),
    #[error(transparent)]
    Path(#[from] PathError),
}

/// A point is swallowed when its cylinder distance to a driving angle drops
/// below this cutoff; the ODE is singular exactly at swallowing.
pub const SWALLOW_CUTOFF: f64 = 1e-8;

/// How a sampled weight function interpolates between nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightKind {
    /// Right-continuous step function.
    Step,
    /// Piecewise-linear interpolation.
    PiecewiseLinear,
}

/// Strictly positive weight `λ: [0, T] → (0, ∞)`, sampled step or
/// piecewise-linear, held constant beyond its last node.
#[derive(Debug, Clone)]
pub struct WeightFunction<S> {
    times: Vec<S>,
    values: Vec<S>,
    kind: WeightKind,
    cumulative: Vec<S>,
    sup: S,
    sup_inv: S,
}

impl<S: Scalar> WeightFunction<S> {
    pub fn constant(value: S) -> Self {
        Self::new(vec![S::zero()], vec![value], WeightKind::Step)
            .expect("constant weight is valid when positive")
    }

    pub fn new(times: Vec<S>, values: Vec<S>, kind: WeightKind) -> Result<Self, LoewnerError> {
        if times.is_empty() || times.len() != values.len() {
            return Err(LoewnerError::BadWeight("need matching nonempty samples".into()));
        }
        if times[0] != S::zero() {
            return Err(LoewnerError::BadWeight("first node must be t = 0".into()));
        }
        for i in 1..times.len() {
            if !(times[i] > times[i - 1]) {
                return Err(LoewnerError::BadWeight(format!("nodes not increasing at {i}")));
            }
        }
        if values.iter().any(|v| !(*v > S::zero()) || !v.is_finite()) {
            return Err(LoewnerError::BadWeight("weight values must be positive".into()));
        }
        // With step or linear interpolation the extrema sit at the nodes.
        let mut sup = values[0];
        let mut inf = values[0];
        for &v in &values {
            sup = sup.max(v);
            inf = inf.min(v);
        }
        let mut cumulative = Vec::with_capacity(times.len());
        cumulative.push(S::zero());
        for i in 1..times.len() {
            let h = times[i] - times[i - 1];
            let piece = match kind {
                WeightKind::Step => values[i - 1] * h,
                WeightKind::PiecewiseLinear => (values[i - 1] + values[i]) * h * S::lit(0.5),
            };
            let prev = cumulative[i - 1];
            cumulative.push(prev + piece);
        }
        Ok(Self { times, values, kind, cumulative, sup, sup_inv: inf.recip() })
    }

    pub fn sup(&self) -> S {
        self.sup
    }

    /// `sup 1/λ`.
    pub fn sup_inv(&self) -> S {
        self.sup_inv
    }

    pub fn nodes(&self) -> &[S] {
        &self.times
    }

    fn segment(&self, t: S) -> usize {
        self.times.partition_point(|&ti| ti <= t).saturating_sub(1)
    }

    pub fn eval(&self, t: S) -> S {
        let i = self.segment(t);
        match self.kind {
            WeightKind::Step => self.values[i],
            WeightKind::PiecewiseLinear => {
                if i + 1 == self.times.len() {
                    self.values[i]
                } else {
                    let w = (t - self.times[i]) / (self.times[i + 1] - self.times[i]);
                    self.values[i] + (self.values[i + 1] - self.values[i]) * w
                }
            }
        }
    }

    /// `∫₀ᵗ λ_s ds`.
    pub fn integral(&self, t: S) -> S {
        let i = self.segment(t);
        let dt = t - self.times[i];
        self.cumulative[i]
            + match self.kind {
                WeightKind::Step => self.values[i] * dt,
                WeightKind::PiecewiseLinear => (self.values[i] + self.eval(t)) * dt * S::lit(0.5),
            }
    }
}

/// `cot(w)` for complex `w = x + iy` through the closed form
/// `(½ sin 2x − (i/2) sinh 2y) / (sin²x + sinh²y)`.
#[inline]
fn cot_c<S: Scalar>(w: Complex<S>) -> Complex<S> {
    let (sx, cx) = (w.re.sin(), w.re.cos());
    let (shy, chy) = (w.im.sinh(), w.im.cosh());
    let den = sx * sx + shy * shy;
    Complex::new(sx * cx / den, -(shy * chy) / den)
}

/// `csc²(w) = 1/sin²(w)`.
#[inline]
fn csc2_c<S: Scalar>(w: Complex<S>) -> Complex<S> {
    let s = Complex::new(w.re.sin() * w.im.cosh(), w.re.cos() * w.im.sinh());
    (s * s).finv()
}

/// Cylinder distance `2√(sin²((x−θ)/2) + sinh²(y/2))`; agrees with the
/// Euclidean distance `|u − θ|` to first order near the singularity and
/// with the chordal distance `|e^{iu} − e^{iθ}|` on the boundary.
#[inline]
fn cylinder_dist<S: Scalar>(u: Complex<S>, theta: S) -> S {
    let half = S::lit(0.5);
    let sx = ((u.re - theta) * half).sin();
    let shy = (u.im * half).sinh();
    S::lit(2.0) * (sx * sx + shy * shy).sqrt()
}

/// Interpolating view of a driver path used by the flow kernels.
struct Driver<'a, S> {
    path: &'a DrivingPath<S>,
    buf: Vec<S>,
}

impl<'a, S: Scalar> Driver<'a, S> {
    fn new(path: &'a DrivingPath<S>) -> Self {
        Self { path, buf: vec![S::zero(); path.n()] }
    }

    fn n(&self) -> usize {
        self.path.n()
    }

    fn sample(&mut self, t: S) {
        let t = t.max(S::zero()).min(self.path.last_time());
        self.path
            .state_at(t, &mut self.buf)
            .expect("time clamped into the sampled range");
    }
}

/// One adaptive integration of the cylinder ODE, forward or backward.
struct FlowRun<S> {
    /// Final position of the point.
    u: Complex<S>,
    /// Derivative of the discrete flow map w.r.t. the initial point, when
    /// the variational equation was carried along.
    deriv: Option<Complex<S>>,
    /// Global time at which the point was swallowed, if it was.
    swallowed_at: Option<S>,
    /// Minimal cylinder distance to a driving angle seen along the run.
    min_dist: S,
}

/// Time direction for [`flow_point`].
#[derive(Clone, Copy, PartialEq)]
enum Direction {
    /// Integrate `∂_s u = +field(s, u)` from `t0` up to `t1`.
    Forward,
    /// Evaluate the inverse map: integrate the same field from `s = t1`
    /// down to `t0`.
    Backward,
}

fn min_driver_dist<S: Scalar>(u: Complex<S>, drivers: &[S]) -> S {
    let mut d = S::infinity();
    for &th in drivers {
        d = d.min(cylinder_dist(u, th));
    }
    d
}

fn field<S: Scalar>(u: Complex<S>, drivers: &[S], lambda: S) -> Complex<S> {
    let half = S::lit(0.5);
    let mut acc = Complex::new(S::zero(), S::zero());
    for &th in drivers {
        acc += cot_c((u - Complex::new(th, S::zero())) * half);
    }
    acc * lambda
}

/// `∂_u field = −(λ/2) Σ csc²((u − θ^j)/2)`.
fn field_deriv<S: Scalar>(u: Complex<S>, drivers: &[S], lambda: S) -> Complex<S> {
    let half = S::lit(0.5);
    let mut acc = Complex::new(S::zero(), S::zero());
    for &th in drivers {
        acc += csc2_c((u - Complex::new(th, S::zero())) * half);
    }
    acc * (-lambda * half)
}

/// Adaptive RK4 for the cylinder ODE on `[t0, t1]`, forward or backward,
/// optionally carrying the variational equation along the same stages (so
/// the computed derivative is exactly that of the discrete flow map).
fn flow_point<S: Scalar>(
    driver: &mut Driver<'_, S>,
    lam: &WeightFunction<S>,
    t0: S,
    t1: S,
    u0: Complex<S>,
    direction: Direction,
    with_derivative: bool,
    cutoff: S,
) -> FlowRun<S> {
    let n = S::from_usize(driver.n()).unwrap();
    let safety = S::lit(0.15);
    let half = S::lit(0.5);
    let sixth = S::lit(1.0 / 6.0);
    let two = S::lit(2.0);
    let one = Complex::new(S::one(), S::zero());

    // Breakpoints of smoothness in global time: driver grid plus λ nodes.
    let mut breaks: Vec<S> = driver
        .path
        .times()
        .iter()
        .chain(lam.nodes())
        .copied()
        .filter(|&t| t > t0 && t < t1)
        .collect();
    breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    breaks.dedup();
    let sign = match direction {
        Direction::Forward => {
            breaks.push(t1);
            S::one()
        }
        Direction::Backward => {
            breaks.reverse();
            breaks.push(t0);
            -S::one()
        }
    };

    let mut u = u0;
    let mut v = one;
    let mut t = match direction {
        Direction::Forward => t0,
        Direction::Backward => t1,
    };
    let mut min_dist = S::infinity();

    for &stop in &breaks {
        loop {
            let remaining = (stop - t) * sign;
            if remaining <= S::zero() {
                break;
            }
            driver.sample(t);
            let d = min_driver_dist(u, &driver.buf);
            min_dist = min_dist.min(d);
            if d < cutoff {
                return FlowRun {
                    u,
                    deriv: with_derivative.then_some(v),
                    swallowed_at: Some(t),
                    min_dist,
                };
            }
            let l = lam.eval(t);
            let speed = l * n * (two / d + S::one());
            let h = remaining.min(safety * d / speed);
            let hs = h * sign;

            // Stage slopes for the state and, when requested, the stage
            // Jacobians for the variational equation.
            driver.sample(t);
            let l1 = lam.eval(t);
            let k1 = field(u, &driver.buf, l1);
            let a1 = if with_derivative { field_deriv(u, &driver.buf, l1) } else { one };

            let tm = t + hs * half;
            let u2 = u + k1 * (hs * half);
            driver.sample(tm);
            let lm = lam.eval(tm);
            let k2 = field(u2, &driver.buf, lm);
            let a2 = if with_derivative {
                field_deriv(u2, &driver.buf, lm) * (one + a1 * (hs * half))
            } else {
                one
            };

            let u3 = u + k2 * (hs * half);
            driver.sample(tm);
            let k3 = field(u3, &driver.buf, lm);
            let a3 = if with_derivative {
                field_deriv(u3, &driver.buf, lm) * (one + a2 * (hs * half))
            } else {
                one
            };

            let te = t + hs;
            let u4 = u + k3 * hs;
            driver.sample(te);
            let le = lam.eval(te);
            let k4 = field(u4, &driver.buf, le);
            let a4 = if with_derivative {
                field_deriv(u4, &driver.buf, le) * (one + a3 * hs)
            } else {
                one
            };

            u += (k1 + (k2 + k3) * two + k4) * (hs * sixth);
            if with_derivative {
                v *= one + (a1 + (a2 + a3) * two + a4) * (hs * sixth);
            }
            t += hs;
            if !u.re.is_finite() || !u.im.is_finite() {
                return FlowRun {
                    u,
                    deriv: with_derivative.then_some(v),
                    swallowed_at: Some(t),
                    min_dist,
                };
            }
        }
        t = stop;
    }
    driver.sample(t);
    min_dist = min_dist.min(min_driver_dist(u, &driver.buf));
    FlowRun { u, deriv: with_derivative.then_some(v), swallowed_at: None, min_dist }
}

/// Trajectory of one boundary point under the forward flow.
#[derive(Debug, Clone)]
pub struct BoundaryTrajectory<S> {
    pub u0: S,
    /// Driver grid times up to the swallowing time.
    pub times: Vec<S>,
    pub values: Vec<S>,
    pub swallowed_at: Option<S>,
}

/// Flows boundary points `u0` under `∂_t u = λ_t Σ_j cot((u − θ^j_t)/2)`
/// until they are swallowed or `t = T`; samples at the driver grid.
pub fn forward_boundary_flow<S: Scalar>(
    p: &DrivingPath<S>,
    u0_grid: &[S],
    lam: &WeightFunction<S>,
) -> Vec<BoundaryTrajectory<S>> {
    let cutoff = S::lit(SWALLOW_CUTOFF);
    u0_grid
        .iter()
        .map(|&u0| {
            let mut driver = Driver::new(p);
            let mut times = vec![S::zero()];
            let mut values = vec![u0];
            let mut u = Complex::new(u0, S::zero());
            let mut swallowed_at = None;
            for w in p.times().windows(2) {
                let run =
                    flow_point(&mut driver, lam, w[0], w[1], u, Direction::Forward, false, cutoff);
                if let Some(tau) = run.swallowed_at {
                    swallowed_at = Some(tau);
                    break;
                }
                u = Complex::new(run.u.re, S::zero()); // boundary stays real
                times.push(w[1]);
                values.push(u.re);
            }
            BoundaryTrajectory { u0, times, values, swallowed_at }
        })
        .collect()
}

/// Point of a hull cloud: disk coordinates plus swallowing time.
#[derive(Debug, Clone, Copy)]
pub struct HullPoint<S> {
    pub re: S,
    pub im: S,
    pub tau: S,
}

/// Polar sampling resolution for [`loewner_hull`].
#[derive(Debug, Clone, Copy)]
pub struct HullResolution {
    pub radial: usize,
    pub angular: usize,
}

impl Default for HullResolution {
    fn default() -> Self {
        Self { radial: 512, angular: 512 }
    }
}

/// Approximates the hull `K_T = {z : τ_z ≤ T}` by flowing a polar grid of
/// interior points and recording swallowing times; the `n` driver start
/// points (swallowed at `τ = 0`) are always part of the cloud.
pub fn loewner_hull<S: Scalar>(
    p: &DrivingPath<S>,
    t_final: S,
    resolution: HullResolution,
    lam: &WeightFunction<S>,
) -> Result<Vec<HullPoint<S>>, LoewnerError> {
    if t_final > p.last_time() {
        return Err(LoewnerError::BeyondHorizon(format!("{t_final}")));
    }
    let cutoff = S::lit(SWALLOW_CUTOFF);
    let mut cloud: Vec<HullPoint<S>> = p
        .initial()
        .iter()
        .map(|&th| HullPoint { re: th.cos(), im: th.sin(), tau: S::zero() })
        .collect();
    if t_final <= S::zero() {
        return Ok(cloud);
    }
    let mut driver = Driver::new(p);
    for ir in 0..resolution.radial {
        let r = S::from_usize(ir + 1).unwrap() / S::from_usize(resolution.radial + 1).unwrap();
        let im_u = -r.ln();
        for ia in 0..resolution.angular {
            let phi = S::two_pi() * S::from_usize(ia).unwrap()
                / S::from_usize(resolution.angular).unwrap();
            let run = flow_point(
                &mut driver,
                lam,
                S::zero(),
                t_final,
                Complex::new(phi, im_u),
                Direction::Forward,
                false,
                cutoff,
            );
            if let Some(tau) = run.swallowed_at {
                if tau <= t_final {
                    cloud.push(HullPoint { re: r * phi.cos(), im: r * phi.sin(), tau });
                }
            }
        }
    }
    Ok(cloud)
}

/// One extracted trace point.
#[derive(Debug, Clone, Copy)]
pub struct TracePoint<S> {
    pub t: S,
    pub point: Complex<S>,
    /// Backward integration passed within the swallow cutoff of a driving
    /// angle; the location is near self-touching and best-effort only.
    pub flagged: bool,
    /// `|f_t'(θ_t + iy₀)|` diagnostic, carried for single chords.
    pub deriv_modulus: Option<S>,
}

/// Traces of all chords: `points[j]` lists chord `j` at the sample times.
#[derive(Debug, Clone)]
pub struct LoewnerTrace<S> {
    pub y0: S,
    pub points: Vec<Vec<TracePoint<S>>>,
}

/// Extracts trace points `γ^j_t = exp(i f_t(θ^j_t + iy))` by backward
/// integration from `θ^j_t + iy₀`, Richardson-extrapolated over `y₀, y₀/2`.
pub fn trace<S: Scalar>(
    p: &DrivingPath<S>,
    sample_times: &[S],
    y0: S,
    lam: &WeightFunction<S>,
) -> Result<LoewnerTrace<S>, LoewnerError> {
    let cutoff = S::lit(SWALLOW_CUTOFF);
    let n = p.n();
    let want_deriv = n == 1;
    let mut points = vec![Vec::with_capacity(sample_times.len()); n];
    let mut buf = vec![S::zero(); n];
    for &t in sample_times {
        if t > p.last_time() {
            return Err(LoewnerError::BeyondHorizon(format!("{t}")));
        }
        p.state_at(t, &mut buf)?;
        for (j, chord) in points.iter_mut().enumerate() {
            let mut flagged = false;
            let mut gamma = [Complex::new(S::zero(), S::zero()); 2];
            let mut deriv = None;
            for (lvl, scale) in [S::one(), S::lit(0.5)].into_iter().enumerate() {
                let w = Complex::new(buf[j], y0 * scale);
                let mut driver = Driver::new(p);
                let run = flow_point(
                    &mut driver,
                    lam,
                    S::zero(),
                    t,
                    w,
                    Direction::Backward,
                    want_deriv && lvl == 0,
                    cutoff,
                );
                flagged |= run.swallowed_at.is_some() || run.min_dist < cutoff;
                gamma[lvl] = (run.u * Complex::new(S::zero(), S::one())).exp();
                if lvl == 0 {
                    deriv = run.deriv.map(|d| d.norm());
                }
            }
            // One Richardson halving on the linear-in-y₀ error model.
            let extrapolated = gamma[1] * S::lit(2.0) - gamma[0];
            chord.push(TracePoint {
                t,
                point: extrapolated,
                flagged,
                deriv_modulus: if want_deriv { deriv } else { None },
            });
        }
    }
    Ok(LoewnerTrace { y0, points })
}

/// Computed `|f_t'(θ_t + iy)|` and the finite-energy bound
/// `exp(½ sup(1/λ) E_T)` for a single chord.
pub fn trace_derivative_bound<S: Scalar>(
    p: &DrivingPath<S>,
    lam: &WeightFunction<S>,
    t: S,
    y: S,
) -> Result<(S, S), LoewnerError> {
    if p.n() != 1 {
        return Err(LoewnerError::SingleChordOnly(p.n()));
    }
    if t > p.last_time() {
        return Err(LoewnerError::BeyondHorizon(format!("{t}")));
    }
    let mut buf = [S::zero()];
    p.state_at(t, &mut buf)?;
    let mut driver = Driver::new(p);
    let run = flow_point(
        &mut driver,
        lam,
        S::zero(),
        t,
        Complex::new(buf[0], y),
        Direction::Backward,
        true,
        S::lit(SWALLOW_CUTOFF),
    );
    let bound = (S::lit(0.5) * lam.sup_inv() * dirichlet_energy(p)).exp();
    Ok((run.deriv.expect("variational equation requested").norm(), bound))
}

/// Measured capacity `log|g_t(z)/z|`, averaged over points of the circle
/// `|z| = 10⁻⁶` (the average cancels the `O(|z|)` angular term of the
/// expansion at the origin), against the expected `n ∫₀ᵗ λ`.
pub fn capacity_check<S: Scalar>(
    p: &DrivingPath<S>,
    lam: &WeightFunction<S>,
    t: S,
) -> Result<(S, S), LoewnerError> {
    if t > p.last_time() {
        return Err(LoewnerError::BeyondHorizon(format!("{t}")));
    }
    let expected = S::from_usize(p.n()).unwrap() * lam.integral(t);
    if t <= S::zero() {
        return Ok((S::zero(), S::zero()));
    }
    let m = 16usize;
    let im_u = S::lit(6.0) * S::lit(10.0).ln(); // |z| = 1e−6
    let mut acc = S::zero();
    let mut driver = Driver::new(p);
    for k in 0..m {
        let phi = S::two_pi() * S::from_usize(k).unwrap() / S::from_usize(m).unwrap();
        let run = flow_point(
            &mut driver,
            lam,
            S::zero(),
            t,
            Complex::new(phi, im_u),
            Direction::Forward,
            false,
            S::lit(SWALLOW_CUTOFF),
        );
        acc += im_u - run.u.im;
    }
    Ok((acc / S::from_usize(m).unwrap(), expected))
}

/// Backward run of the points `w`, `w + iδ`, `w − iδ` on one shared step
/// sequence (adapted to the center trajectory), plus the variational
/// derivative along the center. Sharing the steps makes the centered finite
/// difference `(f(w+iδ) − f(w−iδ))/(2iδ)` of the discrete map directly
/// comparable to the variational result.
pub fn backward_derivative_pair<S: Scalar>(
    p: &DrivingPath<S>,
    lam: &WeightFunction<S>,
    t: S,
    w: Complex<S>,
    delta: S,
) -> (Complex<S>, Complex<S>) {
    let n = S::from_usize(p.n()).unwrap();
    let safety = S::lit(0.15);
    let half = S::lit(0.5);
    let sixth = S::lit(1.0 / 6.0);
    let two = S::lit(2.0);
    let one = Complex::new(S::one(), S::zero());
    let i_delta = Complex::new(S::zero(), delta);

    let mut driver = Driver::new(p);
    let mut breaks: Vec<S> = driver
        .path
        .times()
        .iter()
        .chain(lam.nodes())
        .copied()
        .filter(|&s| s > S::zero() && s < t)
        .collect();
    breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    breaks.dedup();
    breaks.reverse();
    breaks.push(S::zero());

    let mut pts = [w, w + i_delta, w - i_delta];
    let mut v = one;
    let mut s = t;
    for &stop in &breaks {
        loop {
            let remaining = s - stop;
            if remaining <= S::zero() {
                break;
            }
            driver.sample(s);
            let d = min_driver_dist(pts[0], &driver.buf);
            let l = lam.eval(s);
            let speed = l * n * (two / d + S::one());
            let h = remaining.min(safety * d / speed);
            let hs = -h;

            let mut stage_a = [one; 4];
            let mut k = [[Complex::new(S::zero(), S::zero()); 4]; 3];
            for (stage, (dt_stage, frac)) in
                [(S::zero(), S::zero()), (hs * half, half), (hs * half, half), (hs, S::one())]
                    .into_iter()
                    .enumerate()
            {
                driver.sample(s + dt_stage);
                let ls = lam.eval(s + dt_stage);
                for (m, kk) in k.iter_mut().enumerate() {
                    let base = pts[m];
                    let prev = if stage == 0 {
                        Complex::new(S::zero(), S::zero())
                    } else {
                        kk[stage - 1]
                    };
                    let u_stage = base + prev * (hs * frac);
                    kk[stage] = field(u_stage, &driver.buf, ls);
                    if m == 0 {
                        let fd = field_deriv(u_stage, &driver.buf, ls);
                        stage_a[stage] = if stage == 0 {
                            fd
                        } else {
                            fd * (one + stage_a[stage - 1] * (hs * frac))
                        };
                    }
                }
            }
            for (m, kk) in k.iter().enumerate() {
                pts[m] += (kk[0] + (kk[1] + kk[2]) * two + kk[3]) * (hs * sixth);
            }
            v *= one + (stage_a[0] + (stage_a[1] + stage_a[2]) * two + stage_a[3]) * (hs * sixth);
            s += hs;
        }
        s = stop;
    }
    let fd = (pts[1] - pts[2]) / (i_delta * two);
    (v, fd)
}

/// Forward flow of a single interior point; exposed for flow-level checks
/// (inverse consistency, swallowing-time oracles).
pub fn flow_interior_point<S: Scalar>(
    p: &DrivingPath<S>,
    lam: &WeightFunction<S>,
    t0: S,
    t1: S,
    u0: Complex<S>,
) -> (Complex<S>, Option<S>) {
    let mut driver = Driver::new(p);
    let run = flow_point(
        &mut driver,
        lam,
        t0,
        t1,
        u0,
        Direction::Forward,
        false,
        S::lit(SWALLOW_CUTOFF),
    );
    (run.u, run.swallowed_at)
}

/// Backward evaluation `f_t(w)` of the inverse map at one point.
pub fn backward_point<S: Scalar>(
    p: &DrivingPath<S>,
    lam: &WeightFunction<S>,
    t: S,
    w: Complex<S>,
) -> Complex<S> {
    let mut driver = Driver::new(p);
    flow_point(
        &mut driver,
        lam,
        S::zero(),
        t,
        w,
        Direction::Backward,
        false,
        S::lit(SWALLOW_CUTOFF),
    )
    .u
}
