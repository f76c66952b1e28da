//! Deterministic zero-energy flow (trigonometric Calogero–Moser system).
//!
//! The flow integrates `θ̇^j = 2 φ_a^j(θ) + ρ` with a classical fixed-step
//! 4th-order one-step method. Along the flow the smallest gap `Δ(t)` is
//! nondecreasing, so trajectories stay away from the singular set and the
//! configuration converges to equal spacing; [`convergence_report`]
//! quantifies the approach, and [`counterexample_driver`] integrates the
//! two-particle forced system whose convergence is only polynomial despite
//! arbitrarily small energy.

use crate::circle::{
    self, gap_at, gap_stats_raw, phi_j_raw, AngleConfiguration, CircleError,
};
use crate::float::Scalar;
use crate::path::DrivingPath;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FlowError {
    #[error(transparent)]
    Circle(#[from] CircleError),
    #[error("step size and horizon must be positive")]
    BadStep,
    #[error("ordering violated during integration and step-halving cap reached at t = {0}")]
    StepCapExceeded(String),
}

const MAX_HALVINGS: u32 = 10;

fn ordered<S: Scalar>(state: &[S]) -> bool {
    let n = state.len();
    for j in 1..n {
        if !(state[j] > state[j - 1]) {
            return false;
        }
    }
    n < 2 || state[n - 1] - state[0] < S::two_pi()
}

/// One RK4 macro step of `θ̇ = field(t, θ)`; halves recursively if the result
/// (or any stage) leaves the ordered torus.
fn rk4_ordered<S: Scalar>(
    field: &impl Fn(S, &[S], &mut [S]),
    t: S,
    h: S,
    state: &mut [S],
    depth: u32,
) -> Result<(), FlowError> {
    let n = state.len();
    let half = S::lit(0.5);
    let sixth = S::lit(1.0 / 6.0);
    let mut k1 = vec![S::zero(); n];
    let mut k2 = vec![S::zero(); n];
    let mut k3 = vec![S::zero(); n];
    let mut k4 = vec![S::zero(); n];
    let mut stage = vec![S::zero(); n];

    field(t, state, &mut k1);
    for j in 0..n {
        stage[j] = state[j] + half * h * k1[j];
    }
    let mut ok = ordered(&stage);
    if ok {
        field(t + half * h, &stage, &mut k2);
        for j in 0..n {
            stage[j] = state[j] + half * h * k2[j];
        }
        ok = ordered(&stage);
    }
    if ok {
        field(t + half * h, &stage, &mut k3);
        for j in 0..n {
            stage[j] = state[j] + h * k3[j];
        }
        ok = ordered(&stage);
    }
    if ok {
        field(t + h, &stage, &mut k4);
        for j in 0..n {
            stage[j] = state[j] + sixth * h * (k1[j] + S::lit(2.0) * (k2[j] + k3[j]) + k4[j]);
        }
        ok = ordered(&stage) && stage.iter().all(|x| x.is_finite());
    }
    if ok {
        state.copy_from_slice(&stage);
        return Ok(());
    }
    if depth >= MAX_HALVINGS {
        return Err(FlowError::StepCapExceeded(format!("{t}")));
    }
    rk4_ordered(field, t, h * half, state, depth + 1)?;
    rk4_ordered(field, t + h * half, h * half, state, depth + 1)
}

fn integrate<S: Scalar>(
    theta0: &[S],
    t_final: S,
    step: S,
    field: impl Fn(S, &[S], &mut [S]),
) -> Result<DrivingPath<S>, FlowError> {
    if !(step > S::zero()) || !(t_final > S::zero()) {
        return Err(FlowError::BadStep);
    }
    let n = theta0.len();
    let count = (t_final / step).round().to_usize().unwrap().max(1);
    let mut times = Vec::with_capacity(count + 1);
    let mut states = Vec::with_capacity((count + 1) * n);
    let mut state = theta0.to_vec();
    times.push(S::zero());
    states.extend_from_slice(&state);
    for i in 0..count {
        let t = step * S::from_usize(i).unwrap();
        let t_next = if i + 1 == count {
            t_final
        } else {
            step * S::from_usize(i + 1).unwrap()
        };
        rk4_ordered(&field, t, t_next - t, &mut state, 0)?;
        times.push(t_next);
        states.extend_from_slice(&state);
    }
    Ok(DrivingPath::from_raw(times, states, n, None))
}

/// Integrates `θ̇^j = 2 φ_a^j(θ) + ρ` on `[0, T]` with fixed step `step`.
///
/// The raw zero-energy flow is `a = 4, ρ = 0`.
pub fn zero_energy_flow<S: Scalar>(
    theta0: &AngleConfiguration<S>,
    t_final: S,
    step: S,
    a: S,
    rho: S,
) -> Result<DrivingPath<S>, FlowError> {
    if theta0.is_singular() {
        return Err(FlowError::Circle(CircleError::Singular));
    }
    let half_a = a * S::lit(0.5);
    integrate(theta0.angles(), t_final, step, move |_, y, out| {
        for j in 0..y.len() {
            out[j] = half_a * phi_j_raw(y, j) + rho;
        }
    })
}

/// Two-particle forced system with `f(t) = ε/(t+1)` and `θ_0 = (0, π)`,
/// together with the analytic lower bound `ε(1−e^{−4t})/(4(t+1))` for the
/// distance from equal spacing.
pub struct CounterexampleFlow<S> {
    pub path: DrivingPath<S>,
    pub lower_bound: Vec<S>,
}

pub fn counterexample_driver<S: Scalar>(
    eps: S,
    t_final: S,
    step: S,
) -> Result<CounterexampleFlow<S>, FlowError> {
    let theta0 = [S::zero(), S::PI()];
    let two = S::lit(2.0);
    let path = integrate(&theta0, t_final, step, move |t, y, out| {
        let g = (y[0] - y[1]) * S::lit(0.5);
        let force = eps / (t + S::one());
        out[0] = two * crate::float::cot(g) - force;
        out[1] = -two * crate::float::cot(g);
    })?;
    let four = S::lit(4.0);
    let lower_bound = path
        .times()
        .iter()
        .map(|&t| eps * (S::one() - (-four * t).exp()) / (four * (t + S::one())))
        .collect();
    Ok(CounterexampleFlow { path, lower_bound })
}

/// Convergence diagnostics of a flow toward the equally spaced configuration.
#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport<S> {
    pub times: Vec<S>,
    /// `d(θ_t) = max_j |2π/n − (θ^{j+1}_t − θ^j_t)|` per sample.
    pub d_series: Vec<S>,
    /// Smallest gap `Δ(t)` per sample.
    pub delta_series: Vec<S>,
    /// Least-squares slope of `log d` on the tail window
    /// `d ∈ [10⁻⁸, d(θ_0)/10]`; `None` when the window is empty or the path
    /// is too short for a reliable fit.
    pub fitted_rate: Option<S>,
    /// Estimate of the limit angle `ζ`: mean of `θ^j_T − j·2π/n`.
    pub limit_angle: S,
    /// Righthand side of the finite-energy convergence bound
    /// `(n−1) e^{−nt} (2√2 ∫₀ᵗ e^{ns} √(∂_s J_s) ds + d(θ_0))`.
    pub bound_series: Vec<S>,
}

/// Builds the report; `energy_series`, when given, holds the cumulative
/// multiradial energy `J_{t_i}` on the same grid and feeds the bound series.
/// Without it the zero-energy form `(n−1) e^{−nt} d(θ_0)` is used.
pub fn convergence_report<S: Scalar>(
    p: &DrivingPath<S>,
    energy_series: Option<&[S]>,
) -> ConvergenceReport<S> {
    let n = S::from_usize(p.n()).unwrap();
    let times = p.times().to_vec();
    let mut d_series = Vec::with_capacity(p.len());
    let mut delta_series = Vec::with_capacity(p.len());
    for i in 0..p.len() {
        let stats = gap_stats_raw(p.state(i));
        d_series.push(stats.d);
        delta_series.push(stats.delta_min);
    }
    let d0 = d_series[0];

    // Rate fit on the window d ∈ [1e−8, d(θ_0)/10], guarding against the
    // floating-point floor below and the transient above.
    let lo = S::lit(1e-8);
    let hi = d0 / S::lit(10.0);
    let fitted_rate = if *d_series.last().unwrap() >= hi || d0 <= lo {
        None
    } else {
        let pts: Vec<(S, S)> = times
            .iter()
            .zip(&d_series)
            .filter(|(_, &d)| d >= lo && d <= hi && d > S::zero())
            .map(|(&t, &d)| (t, d.ln()))
            .collect();
        fit_slope(&pts).map(|s| -s)
    };

    // ζ from the final state.
    let step = S::two_pi() / n;
    let final_state = p.final_state();
    let limit_angle = final_state
        .iter()
        .enumerate()
        .map(|(j, &t)| t - step * S::from_usize(j).unwrap())
        .sum::<S>()
        / n;

    // Incremental form of the bound, rescaled each step to avoid overflow of
    // e^{ns}: I_t = e^{−nt} ∫₀ᵗ e^{ns} √(∂_s J_s) ds satisfies
    // I_{i+1} = I_i e^{−nh} + e^{−nh/2} √(slope) h.
    let two_sqrt2 = S::lit(2.0) * S::lit(2.0).sqrt();
    let nm1 = n - S::one();
    let mut bound_series = Vec::with_capacity(p.len());
    let mut integral = S::zero();
    for i in 0..p.len() {
        if i > 0 {
            let h = times[i] - times[i - 1];
            let slope = match energy_series {
                Some(js) => ((js[i] - js[i - 1]) / h).max(S::zero()),
                None => S::zero(),
            };
            integral = integral * (-n * h).exp()
                + (-n * h * S::lit(0.5)).exp() * slope.sqrt() * h;
        }
        bound_series.push(nm1 * (two_sqrt2 * integral + (-n * times[i]).exp() * d0));
    }

    ConvergenceReport { times, d_series, delta_series, fitted_rate, limit_angle, bound_series }
}

fn fit_slope<S: Scalar>(pts: &[(S, S)]) -> Option<S> {
    if pts.len() < 2 {
        return None;
    }
    let n = S::from_usize(pts.len()).unwrap();
    let mean_x = pts.iter().map(|p| p.0).sum::<S>() / n;
    let mean_y = pts.iter().map(|p| p.1).sum::<S>() / n;
    let mut sxx = S::zero();
    let mut sxy = S::zero();
    for &(x, y) in pts {
        sxx += (x - mean_x) * (x - mean_x);
        sxy += (x - mean_x) * (y - mean_y);
    }
    if sxx > S::zero() {
        Some(sxy / sxx)
    } else {
        None
    }
}

/// Both sides of the gap inequality at the minimal gap:
/// `φ^{j+1} − φ^j ≥ π − n(θ^{j+1} − θ^j)/2 ≥ 0` for `j` in the argmin set.
pub fn gap_bound_check<S: Scalar>(theta: &AngleConfiguration<S>) -> Vec<(S, S)> {
    let angles = theta.angles();
    let n = theta.n();
    let stats = circle::gap_stats(theta);
    stats
        .argmin
        .iter()
        .map(|&j| {
            let next = (j + 1) % n; // φ^{n+1} = φ^1 under the 2π lift
            let lhs = phi_j_raw(angles, next) - phi_j_raw(angles, j);
            let rhs = S::PI() - S::from_usize(n).unwrap() * gap_at(angles, j) * S::lit(0.5);
            (lhs, rhs)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circle::gap_stats;
    use crate::energy::multiradial_energy;
    use crate::path::sup_distance;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn equally_spaced_is_a_fixed_point() {
        let theta0 = AngleConfiguration::equally_spaced(4, 0.5);
        let p = zero_energy_flow(&theta0, 1.0, 1e-2, 4.0, 0.0).unwrap();
        for i in 0..p.len() {
            for j in 0..4 {
                assert_abs_diff_eq!(p.state(i)[j], theta0.angles()[j], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn two_particle_gap_matches_closed_form() {
        // cos(g_t/2) = cos(g_0/2) e^{−2t}
        let g0 = PI / 2.0;
        let theta0 = AngleConfiguration::new(vec![0.0, g0]).unwrap();
        let p = zero_energy_flow(&theta0, 1.0, 1e-3, 4.0, 0.0).unwrap();
        for (i, &t) in p.times().iter().enumerate() {
            let g = p.state(i)[1] - p.state(i)[0];
            assert_abs_diff_eq!(
                (g / 2.0).cos(),
                (g0 / 2.0f64).cos() * (-2.0 * t).exp(),
                epsilon = 1e-10
            );
        }
        // frozen from the closed form: g(1) = 2 arccos(cos(π/4) e^{−2})
        let g1 = p.final_state()[1] - p.final_state()[0];
        let oracle = 2.0 * ((PI / 4.0f64).cos() * (-2.0f64).exp()).acos();
        assert_abs_diff_eq!(g1, oracle, epsilon = 1e-9);
        assert_abs_diff_eq!(oracle, 2.9499063263725898, epsilon = 1e-12);
    }

    #[test]
    fn spiral_shifts_mean_angle_at_rate_rho() {
        let g0 = PI / 2.0;
        let theta0 = AngleConfiguration::new(vec![0.0, g0]).unwrap();
        let plain = zero_energy_flow(&theta0, 1.0, 1e-3, 4.0, 0.0).unwrap();
        let spiral = zero_energy_flow(&theta0, 1.0, 1e-3, 4.0, 1.0).unwrap();
        for (i, &t) in plain.times().iter().enumerate() {
            // gap evolution unchanged, mean drifts at rate ρ = 1
            let gp = plain.state(i)[1] - plain.state(i)[0];
            let gs = spiral.state(i)[1] - spiral.state(i)[0];
            assert_abs_diff_eq!(gp, gs, epsilon = 1e-10);
            let mp = 0.5 * (plain.state(i)[0] + plain.state(i)[1]);
            let ms = 0.5 * (spiral.state(i)[0] + spiral.state(i)[1]);
            assert_abs_diff_eq!(ms - mp, t, epsilon = 1e-10);
        }
    }

    #[test]
    fn delta_monotone_and_energy_small() {
        let theta0 =
            AngleConfiguration::new(vec![0.1, 1.9, 2.9, 4.4, 5.3]).unwrap();
        let p = zero_energy_flow(&theta0, 2.0, 1e-3, 4.0, 0.0).unwrap();
        let mut last = 0.0f64;
        for i in 0..p.len() {
            let delta = gap_stats_raw_delta(p.state(i));
            assert!(delta >= last - 1e-10);
            last = delta;
        }
        // 4th-order consistency: the integrated flow has tiny multiradial energy
        let j = multiradial_energy(&p, 4.0, 0.0);
        assert!(j < 1e-10, "flow energy {j}");
    }

    #[test]
    fn flow_energy_scales_like_step_to_the_fourth() {
        // J(h) ≤ C·h⁴·T with C calibrated empirically at the coarser step
        let theta0 = AngleConfiguration::new(vec![0.1, 1.9, 2.9, 4.4, 5.3]).unwrap();
        let t_final = 1.0;
        let (h1, h2) = (0.02f64, 0.01f64);
        let j1 = multiradial_energy(&zero_energy_flow(&theta0, t_final, h1, 4.0, 0.0).unwrap(), 4.0, 0.0);
        let j2 = multiradial_energy(&zero_energy_flow(&theta0, t_final, h2, 4.0, 0.0).unwrap(), 4.0, 0.0);
        let c = j1 / (h1.powi(4) * t_final);
        assert!(j2 <= 2.0 * c * h2.powi(4) * t_final, "J(h/2) = {j2} vs C h⁴ T = {}", c * h2.powi(4) * t_final);
        assert!(j2 < j1, "refinement must reduce the flow energy");
    }

    fn gap_stats_raw_delta(state: &[f64]) -> f64 {
        crate::circle::gap_stats_raw(state).delta_min
    }

    #[test]
    fn rotation_equivariance_of_flow() {
        let theta0 = AngleConfiguration::new(vec![0.2, 2.0, 4.0]).unwrap();
        let c = 0.7;
        let a = zero_energy_flow(&theta0, 1.0, 1e-2, 4.0, 0.0).unwrap();
        let b = zero_energy_flow(&theta0.rotated(c), 1.0, 1e-2, 4.0, 0.0).unwrap();
        assert!(sup_distance(&a.rotated(c), &b).unwrap() < 1e-12);
    }

    #[test]
    fn report_on_constant_equally_spaced() {
        let p = DrivingPath::from_fn(3, 1.0, 0.1, |_, j| 0.4 + j as f64 * 2.0 * PI / 3.0);
        let r = convergence_report(&p, None);
        assert!(r.d_series.iter().all(|&d| d < 1e-14));
        assert!(r.bound_series.iter().all(|&b| b < 1e-13));
        assert!(r.fitted_rate.is_none());
        assert_abs_diff_eq!(r.limit_angle, 0.4, epsilon = 1e-12);
    }

    #[test]
    fn n2_d_series_matches_gap_oracle() {
        // d(θ_t) = π − g_t with cos(g_t/2) = cos(π/4) e^{−2t}; at t = 2 the
        // closed form gives d ≈ 0.025903
        let theta0 = AngleConfiguration::new(vec![0.0, PI / 2.0]).unwrap();
        let p = zero_energy_flow(&theta0, 2.0, 1e-3, 4.0, 0.0).unwrap();
        let r = convergence_report(&p, None);
        let d_end = *r.d_series.last().unwrap();
        let oracle = PI - 2.0 * ((PI / 4.0f64).cos() * (-4.0f64).exp()).acos();
        assert_abs_diff_eq!(d_end, oracle, epsilon = 1e-8);
        assert_abs_diff_eq!(oracle, 0.025902949077005744, epsilon = 1e-10);
    }

    #[test]
    fn gap_bound_examples() {
        let eq = AngleConfiguration::equally_spaced(4, 0.0);
        for (lhs, rhs) in gap_bound_check(&eq) {
            assert_abs_diff_eq!(lhs, 0.0, epsilon = 1e-12);
            assert_abs_diff_eq!(rhs, 0.0, epsilon = 1e-12);
        }

        let t = AngleConfiguration::new(vec![0.0, PI / 2.0]).unwrap();
        let checks = gap_bound_check(&t);
        assert_eq!(checks.len(), 1);
        let (lhs, rhs) = checks[0];
        assert_abs_diff_eq!(lhs, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(rhs, PI / 2.0, epsilon = 1e-12);
        assert!(lhs >= rhs && rhs >= 0.0);
    }

    #[test]
    fn counterexample_reduces_to_zero_energy_at_eps_zero() {
        let flow = counterexample_driver(0.0, 1.0, 1e-3).unwrap();
        for i in 0..flow.path.len() {
            assert_abs_diff_eq!(flow.path.state(i)[0], 0.0, epsilon = 1e-12);
            assert_abs_diff_eq!(flow.path.state(i)[1], PI, epsilon = 1e-12);
        }
        assert!(flow.lower_bound.iter().all(|&b| b == 0.0));
    }

    #[test]
    fn counterexample_dominates_lower_bound() {
        let flow = counterexample_driver(0.1, 5.0, 1e-3).unwrap();
        for (i, &b) in flow.lower_bound.iter().enumerate() {
            let d = gap_stats(
                &AngleConfiguration::new(flow.path.state(i).to_vec()).unwrap(),
            )
            .d;
            assert!(d >= b - 1e-12, "t = {} d = {d} bound = {b}", flow.path.times()[i]);
        }
    }
}
