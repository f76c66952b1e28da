//! Time-sampled driving paths on the ordered torus.
//!
//! A [`DrivingPath`] is a strictly increasing time grid starting at zero
//! together with one [`AngleConfiguration`]-valid state per sample. Between
//! samples the path is interpreted as piecewise linear; every functional in
//! this crate is defined on that interpretation, which makes energies of
//! test paths exactly computable and keeps the Dirichlet energy of the
//! interpolant a lower bound for the underlying continuous path.
//!
//! Paths of simulations that ran into a collision carry an explicit
//! termination time; their grid simply ends there, so any evaluation past
//! the collision fails the usual time-range checks.

use crate::circle::{AngleConfiguration, CircleError};
use crate::float::Scalar;
use num_complex::Complex;
use std::io::{self, BufRead, Write};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PathError {
    #[error("path needs at least one sample")]
    Empty,
    #[error("time grid must start at 0 (got {0})")]
    NonzeroStart(String),
    #[error("time grid not strictly increasing at sample {0}")]
    NonMonotoneTimes(usize),
    #[error("state at sample {index} invalid: {source}")]
    InvalidState {
        index: usize,
        source: CircleError,
    },
    #[error("state length {got} does not match particle count {expected}")]
    RaggedState { got: usize, expected: usize },
    #[error("particle counts differ ({0} vs {1})")]
    DimensionMismatch(usize, usize),
    #[error("time grids differ; resample onto a common grid first")]
    GridMismatch,
    #[error("time {0} outside the sampled range")]
    TimeOutOfRange(String),
    #[error("invalid time change: {0}")]
    InvalidTimeChange(String),
    #[error("csv: {0}")]
    Csv(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Piecewise-linear driving path: shared time grid plus one state per time.
#[derive(Debug, Clone, PartialEq)]
pub struct DrivingPath<S> {
    times: Vec<S>,
    /// Row-major states, `states[i*n..(i+1)*n]` is the configuration at `times[i]`.
    states: Vec<S>,
    n: usize,
    terminated: Option<S>,
}

impl<S: Scalar> DrivingPath<S> {
    pub fn new(times: Vec<S>, states: Vec<Vec<S>>) -> Result<Self, PathError> {
        if times.is_empty() || times.len() != states.len() {
            return Err(PathError::Empty);
        }
        if times[0] != S::zero() {
            return Err(PathError::NonzeroStart(format!("{}", times[0])));
        }
        let n = states[0].len();
        let mut flat = Vec::with_capacity(times.len() * n);
        for (i, s) in states.iter().enumerate() {
            if i > 0 && !(times[i] > times[i - 1]) {
                return Err(PathError::NonMonotoneTimes(i));
            }
            if s.len() != n {
                return Err(PathError::RaggedState { got: s.len(), expected: n });
            }
            AngleConfiguration::new(s.clone())
                .map_err(|source| PathError::InvalidState { index: i, source })?;
            flat.extend_from_slice(s);
        }
        Ok(Self { times, states: flat, n, terminated: None })
    }

    /// Internal constructor for integrators that guarantee validity themselves.
    pub(crate) fn from_raw(times: Vec<S>, states: Vec<S>, n: usize, terminated: Option<S>) -> Self {
        debug_assert_eq!(times.len() * n, states.len());
        Self { times, states, n, terminated }
    }

    /// Samples a closure on a uniform grid; handy for analytic test paths.
    pub fn from_fn(n: usize, t_final: S, step: S, f: impl Fn(S, usize) -> S) -> Self {
        let count = (t_final / step).round().to_usize().unwrap().max(1);
        let mut times = Vec::with_capacity(count + 1);
        let mut states = Vec::with_capacity((count + 1) * n);
        for i in 0..=count {
            let t = if i == count { t_final } else { step * S::from_usize(i).unwrap() };
            times.push(t);
            for j in 0..n {
                states.push(f(t, j));
            }
        }
        Self::from_raw(times, states, n, None)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[S] {
        &self.times
    }

    pub fn state(&self, i: usize) -> &[S] {
        &self.states[i * self.n..(i + 1) * self.n]
    }

    pub fn initial(&self) -> &[S] {
        self.state(0)
    }

    pub fn last_time(&self) -> S {
        *self.times.last().unwrap()
    }

    pub fn final_state(&self) -> &[S] {
        self.state(self.len() - 1)
    }

    /// Collision time for paths terminated by a simulation, if any.
    pub fn terminated_at(&self) -> Option<S> {
        self.terminated
    }

    pub(crate) fn set_terminated(&mut self, tau: S) {
        self.terminated = Some(tau);
    }

    /// Linearly interpolated state at `t`, written into `out`.
    pub fn state_at(&self, t: S, out: &mut [S]) -> Result<(), PathError> {
        if t < S::zero() || t > self.last_time() {
            return Err(PathError::TimeOutOfRange(format!("{t}")));
        }
        // index of the last grid time ≤ t
        let i = self.times.partition_point(|&ti| ti <= t).saturating_sub(1);
        if i + 1 == self.len() {
            out.copy_from_slice(self.state(i));
            return Ok(());
        }
        let (t0, t1) = (self.times[i], self.times[i + 1]);
        let w = (t - t0) / (t1 - t0);
        let (s0, s1) = (self.state(i), self.state(i + 1));
        for j in 0..self.n {
            out[j] = s0[j] + (s1[j] - s0[j]) * w;
        }
        Ok(())
    }

    /// Linear-interpolation resampling onto a new grid within `[0, T]`.
    pub fn resample(&self, new_times: &[S]) -> Result<Self, PathError> {
        let mut states = Vec::with_capacity(new_times.len() * self.n);
        let mut buf = vec![S::zero(); self.n];
        for (i, &t) in new_times.iter().enumerate() {
            if i > 0 && !(t > new_times[i - 1]) {
                return Err(PathError::NonMonotoneTimes(i));
            }
            self.state_at(t, &mut buf)?;
            states.extend_from_slice(&buf);
        }
        Ok(Self::from_raw(new_times.to_vec(), states, self.n, self.terminated))
    }

    /// Path shifted by a constant angle in every coordinate.
    pub fn rotated(&self, c: S) -> Self {
        Self {
            times: self.times.clone(),
            states: self.states.iter().map(|&x| x + c).collect(),
            n: self.n,
            terminated: self.terminated,
        }
    }

    /// Writes the CSV format `t,theta1,...,theta{n}`, one row per sample,
    /// floats in full round-trip precision, Unix newlines.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        write!(w, "t")?;
        for j in 1..=self.n {
            write!(w, ",theta{j}")?;
        }
        writeln!(w)?;
        for i in 0..self.len() {
            write!(w, "{}", self.times[i])?;
            for x in self.state(i) {
                write!(w, ",{x}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("write to Vec cannot fail");
        String::from_utf8(buf).expect("csv output is utf-8")
    }
}

impl DrivingPath<f64> {
    /// Parses the CSV format written by [`DrivingPath::write_csv`].
    pub fn read_csv<R: BufRead>(r: R) -> Result<Self, PathError> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| PathError::Csv("empty file".into()))??;
        let cols: Vec<&str> = header.trim_end().split(',').collect();
        if cols.first() != Some(&"t") || cols.len() < 2 {
            return Err(PathError::Csv("header must be t,theta1,...".into()));
        }
        for (j, c) in cols[1..].iter().enumerate() {
            if *c != format!("theta{}", j + 1) {
                return Err(PathError::Csv(format!("unexpected column name {c:?}")));
            }
        }
        let n = cols.len() - 1;
        let mut times = Vec::new();
        let mut states = Vec::new();
        for (row, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.trim_end().split(',');
            let t: f64 = fields
                .next()
                .unwrap()
                .parse()
                .map_err(|e| PathError::Csv(format!("row {}: {e}", row + 2)))?;
            let state: Vec<f64> = fields
                .map(|f| f.parse().map_err(|e| PathError::Csv(format!("row {}: {e}", row + 2))))
                .collect::<Result<_, _>>()?;
            if state.len() != n {
                return Err(PathError::Csv(format!("row {}: wrong arity", row + 2)));
            }
            times.push(t);
            states.push(state);
        }
        Self::new(times, states)
    }
}

/// Sup metric `sup_t |p_t − q_t|₂` on paths sharing a time grid.
pub fn sup_distance<S: Scalar>(p: &DrivingPath<S>, q: &DrivingPath<S>) -> Result<S, PathError> {
    if p.n() != q.n() {
        return Err(PathError::DimensionMismatch(p.n(), q.n()));
    }
    if p.times() != q.times() {
        return Err(PathError::GridMismatch);
    }
    let mut sup = S::zero();
    for i in 0..p.len() {
        let (a, b) = (p.state(i), q.state(i));
        let mut acc = S::zero();
        for j in 0..p.n() {
            let d = a[j] - b[j];
            acc += d * d;
        }
        sup = sup.max(acc.sqrt());
    }
    Ok(sup)
}

/// Sampled time change `σ: [0, T̂] → [0, σ(T̂)]`, strictly increasing with
/// slope bounded away from zero and infinity.
#[derive(Debug, Clone)]
pub struct TimeChange<S> {
    times: Vec<S>,
    sigma: Vec<S>,
    sup_rate: S,
    sup_inv_rate: S,
}

impl<S: Scalar> TimeChange<S> {
    pub fn new(times: Vec<S>, sigma: Vec<S>) -> Result<Self, PathError> {
        if times.len() != sigma.len() || times.len() < 2 {
            return Err(PathError::InvalidTimeChange("need at least two samples".into()));
        }
        if times[0] != S::zero() || sigma[0] != S::zero() {
            return Err(PathError::InvalidTimeChange("σ(0) = 0 required".into()));
        }
        let mut sup_rate = S::zero();
        let mut sup_inv_rate = S::zero();
        for i in 1..times.len() {
            if !(times[i] > times[i - 1]) {
                return Err(PathError::InvalidTimeChange(format!(
                    "times not increasing at sample {i}"
                )));
            }
            let ds = sigma[i] - sigma[i - 1];
            if !(ds > S::zero()) {
                return Err(PathError::InvalidTimeChange(format!(
                    "σ not increasing at sample {i}"
                )));
            }
            let rate = ds / (times[i] - times[i - 1]);
            sup_rate = sup_rate.max(rate);
            sup_inv_rate = sup_inv_rate.max(rate.recip());
        }
        Ok(Self { times, sigma, sup_rate, sup_inv_rate })
    }

    /// Identity time change on a grid.
    pub fn identity(times: Vec<S>) -> Result<Self, PathError> {
        let sigma = times.clone();
        Self::new(times, sigma)
    }

    pub fn times(&self) -> &[S] {
        &self.times
    }

    pub fn sup_rate(&self) -> S {
        self.sup_rate
    }

    pub fn sup_inv_rate(&self) -> S {
        self.sup_inv_rate
    }

    /// Piecewise-linear evaluation of `σ(t)`.
    pub fn eval(&self, t: S) -> S {
        let i = self.times.partition_point(|&ti| ti <= t).saturating_sub(1);
        if i + 1 == self.times.len() {
            return self.sigma[i];
        }
        let w = (t - self.times[i]) / (self.times[i + 1] - self.times[i]);
        self.sigma[i] + (self.sigma[i + 1] - self.sigma[i]) * w
    }

    /// The inverse time change on the image grid; `σ` strictly increasing
    /// makes the swap well defined.
    pub fn inverse(&self) -> Self {
        Self {
            times: self.sigma.clone(),
            sigma: self.times.clone(),
            sup_rate: self.sup_inv_rate,
            sup_inv_rate: self.sup_rate,
        }
    }
}

/// Reparameterized path `θ̂_t = θ_{σ(t)}` on the time-change grid.
pub fn apply_time_change<S: Scalar>(
    p: &DrivingPath<S>,
    tc: &TimeChange<S>,
) -> Result<DrivingPath<S>, PathError> {
    let mut states = Vec::with_capacity(tc.times.len() * p.n());
    let mut buf = vec![S::zero(); p.n()];
    for &t in &tc.times {
        let s = tc.eval(t);
        if s > p.last_time() {
            return Err(PathError::InvalidTimeChange(format!(
                "σ({t}) = {s} exceeds the path horizon"
            )));
        }
        p.state_at(s, &mut buf)?;
        states.extend_from_slice(&buf);
    }
    Ok(DrivingPath::from_raw(tc.times.clone(), states, p.n(), p.terminated))
}

/// Pointwise circle embedding `θ ↦ e^{iθ}`, one list per sample time.
pub fn embed_circle<S: Scalar>(p: &DrivingPath<S>) -> Vec<Vec<Complex<S>>> {
    (0..p.len())
        .map(|i| {
            p.state(i)
                .iter()
                .map(|&t| Complex::new(t.cos(), t.sin()))
                .collect()
        })
        .collect()
}

/// Principal-branch angle of a unit-modulus point, in `[0, 2π)`.
pub fn principal_angle<S: Scalar>(z: Complex<S>) -> S {
    let a = z.im.atan2(z.re);
    if a < S::zero() {
        a + S::two_pi()
    } else {
        a
    }
}

/// Interval velocities of the piecewise-linear interpretation.
#[derive(Debug, Clone)]
pub struct IntervalVelocities<S> {
    /// Interval midpoints `(t_i + t_{i+1})/2`.
    pub midpoints: Vec<S>,
    /// Row-major velocities, one row of length `n` per interval.
    pub velocities: Vec<S>,
}

/// Forward difference quotients `(θ_{t+h} − θ_t)/h` attached to interval
/// midpoints; exact for the piecewise-linear interpretation.
pub fn numeric_derivative<S: Scalar>(p: &DrivingPath<S>) -> IntervalVelocities<S> {
    let n = p.n();
    let m = p.len().saturating_sub(1);
    let mut midpoints = Vec::with_capacity(m);
    let mut velocities = Vec::with_capacity(m * n);
    let half = S::lit(0.5);
    for i in 0..m {
        let h = p.times()[i + 1] - p.times()[i];
        midpoints.push((p.times()[i] + p.times()[i + 1]) * half);
        let (s0, s1) = (p.state(i), p.state(i + 1));
        for j in 0..n {
            velocities.push((s1[j] - s0[j]) / h);
        }
    }
    IntervalVelocities { midpoints, velocities }
}
