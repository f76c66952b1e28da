//! Static interaction functions on the ordered torus.
//!
//! A configuration is an ordered `n`-tuple of angles
//! `θ¹ < θ² < … < θⁿ < θ¹ + 2π` (lifted to the real line; indices wrap with
//! the convention `θ^{n+j} = θ^j + 2π`). The functions evaluated here are
//!
//! ```text
//! φ_a^j(θ) = (a/4) Σ_{k≠j} cot((θ^j − θ^k)/2)        (angular drift)
//! ψ^j(θ)   = Σ_{k≠j} csc²((θ^j − θ^k)/2)             (repulsion)
//! F(θ)     = Π_{j<k} |sin((θ^k − θ^j)/2)|            (Vandermonde product)
//! G_a(θ)   = −a log F(θ)                             (log potential)
//! ```
//!
//! together with the gap statistics `Δ` (smallest circular gap),
//! `y = 2π/n − Δ`, `Y = max gap − 2π/n`, and `d = max{y, Y}` that quantify
//! distance from the equally spaced configuration.
//!
//! All functions are invariant under a common rotation `θ → θ + c·(1,…,1)`
//! and are evaluated pairwise, so they cost `O(n²)`.

use crate::float::{cot, csc2, Scalar};
use thiserror::Error;

/// Chordal distance below which a pair of points counts as collided.
///
/// The criterion is `|e^{iθ^j} − e^{iθ^k}| = 2|sin((θ^j−θ^k)/2)| < 1e−12`.
pub const COLLISION_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CircleError {
    #[error("configuration needs at least one angle")]
    Empty,
    #[error("angles not strictly increasing at position {0}")]
    NotOrdered(usize),
    #[error("angular span must be below 2π (got span of {0})")]
    SpanTooLarge(String),
    #[error("singular configuration: minimal chordal gap below tolerance")]
    Singular,
    #[error("index {j} out of range for {n} particles")]
    IndexOutOfRange { j: usize, n: usize },
}

/// Point of the ordered torus: `n` angles with `θ¹ < … < θⁿ < θ¹ + 2π`.
///
/// Angles are stored as raw reals on a lift of the circle; no modular
/// reduction is performed, so drifting configurations keep differentiable
/// coordinates. Reduction to `[0, 2π)` happens only at the circle embedding.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleConfiguration<S> {
    angles: Vec<S>,
}

impl<S: Scalar> AngleConfiguration<S> {
    pub fn new(angles: Vec<S>) -> Result<Self, CircleError> {
        if angles.is_empty() {
            return Err(CircleError::Empty);
        }
        for j in 1..angles.len() {
            if !(angles[j] > angles[j - 1]) {
                return Err(CircleError::NotOrdered(j));
            }
        }
        let span = angles[angles.len() - 1] - angles[0];
        if angles.len() > 1 && !(span < S::two_pi()) {
            return Err(CircleError::SpanTooLarge(format!("{span}")));
        }
        Ok(Self { angles })
    }

    /// Equally spaced configuration `ζ, ζ + 2π/n, …, ζ + (n−1)2π/n`.
    pub fn equally_spaced(n: usize, zeta: S) -> Self {
        let step = S::two_pi() / S::from_usize(n).unwrap();
        Self {
            angles: (0..n).map(|j| zeta + step * S::from_usize(j).unwrap()).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.angles.len()
    }

    pub fn angles(&self) -> &[S] {
        &self.angles
    }

    pub fn rotated(&self, c: S) -> Self {
        Self {
            angles: self.angles.iter().map(|&t| t + c).collect(),
        }
    }

    /// The `n` circular gaps `θ^{j+1} − θ^j`, the last one wrapping around.
    pub fn gaps(&self) -> Vec<S> {
        gaps_raw(&self.angles)
    }

    pub fn min_gap(&self) -> S {
        min_gap_raw(&self.angles)
    }

    /// Minimal chordal distance `min_{j<k} |e^{iθ^j} − e^{iθ^k}|`.
    pub fn min_chordal_gap(&self) -> S {
        min_chordal_gap_raw(&self.angles)
    }

    pub fn is_singular(&self) -> bool {
        self.n() > 1 && self.min_chordal_gap() < S::lit(COLLISION_TOL)
    }
}

/// Circular gaps of an ordered slice, including the wrap-around gap.
pub fn gaps_raw<S: Scalar>(angles: &[S]) -> Vec<S> {
    let n = angles.len();
    let mut g = Vec::with_capacity(n);
    for j in 0..n {
        g.push(gap_at(angles, j));
    }
    g
}

#[inline]
pub(crate) fn gap_at<S: Scalar>(angles: &[S], j: usize) -> S {
    let n = angles.len();
    if j + 1 < n {
        angles[j + 1] - angles[j]
    } else {
        angles[0] + S::two_pi() - angles[n - 1]
    }
}

pub(crate) fn min_gap_raw<S: Scalar>(angles: &[S]) -> S {
    let n = angles.len();
    if n < 2 {
        return S::two_pi();
    }
    let mut m = gap_at(angles, 0);
    for j in 1..n {
        m = m.min(gap_at(angles, j));
    }
    m
}

pub(crate) fn min_chordal_gap_raw<S: Scalar>(angles: &[S]) -> S {
    // For an ordered configuration the minimal pairwise chordal distance is
    // attained at a circular nearest-neighbor pair.
    let n = angles.len();
    if n < 2 {
        return S::lit(2.0);
    }
    let two = S::lit(2.0);
    let mut m = S::infinity();
    for j in 0..n {
        let g = gap_at(angles, j);
        m = m.min(two * (g / two).sin().abs());
    }
    m
}

#[inline]
pub(crate) fn is_singular_raw<S: Scalar>(angles: &[S]) -> bool {
    angles.len() > 1 && min_chordal_gap_raw(angles) < S::lit(COLLISION_TOL)
}

/// Raw angular drift `φ^j(θ) = Σ_{k≠j} cot((θ^j − θ^k)/2)` without validity
/// checks; callers on hot paths keep configurations ordered themselves.
#[inline]
pub(crate) fn phi_j_raw<S: Scalar>(angles: &[S], j: usize) -> S {
    let half = S::lit(0.5);
    let tj = angles[j];
    let mut acc = S::zero();
    for (k, &tk) in angles.iter().enumerate() {
        if k != j {
            acc += cot((tj - tk) * half);
        }
    }
    acc
}

/// Angular drift `φ_a^j(θ) = (a/4) Σ_{k≠j} cot((θ^j − θ^k)/2)`.
///
/// The raw `φ^j` of the interacting particle system is recovered with `a = 4`.
/// Errors on singular (collided) configurations where the cotangent blows up.
pub fn interaction_drift<S: Scalar>(
    theta: &AngleConfiguration<S>,
    j: usize,
    a: S,
) -> Result<S, CircleError> {
    let n = theta.n();
    if j >= n {
        return Err(CircleError::IndexOutOfRange { j, n });
    }
    if theta.is_singular() {
        return Err(CircleError::Singular);
    }
    Ok(a * S::lit(0.25) * phi_j_raw(theta.angles(), j))
}

/// Repulsion `ψ^j = Σ_{k≠j} csc²((θ^j − θ^k)/2)` per index, plus the total
/// `ψ = Σ_j ψ^j`. Satisfies `ψ = Σ_j (φ^j)² + n(n²−1)/3`.
pub fn repulsion_psi<S: Scalar>(
    theta: &AngleConfiguration<S>,
) -> Result<(Vec<S>, S), CircleError> {
    if theta.is_singular() {
        return Err(CircleError::Singular);
    }
    let angles = theta.angles();
    let half = S::lit(0.5);
    let mut parts = vec![S::zero(); angles.len()];
    for (j, pj) in parts.iter_mut().enumerate() {
        let tj = angles[j];
        for (k, &tk) in angles.iter().enumerate() {
            if k != j {
                *pj += csc2((tj - tk) * half);
            }
        }
    }
    let total = parts.iter().copied().sum();
    Ok((parts, total))
}

pub(crate) fn psi_total_raw<S: Scalar>(angles: &[S]) -> S {
    let half = S::lit(0.5);
    let mut total = S::zero();
    for j in 0..angles.len() {
        let tj = angles[j];
        for (k, &tk) in angles.iter().enumerate() {
            if k != j {
                total += csc2((tj - tk) * half);
            }
        }
    }
    total
}

pub(crate) fn log_f_raw<S: Scalar>(angles: &[S]) -> S {
    let half = S::lit(0.5);
    let mut acc = S::zero();
    for j in 0..angles.len() {
        for k in (j + 1)..angles.len() {
            acc += ((angles[k] - angles[j]) * half).sin().abs().ln();
        }
    }
    acc
}

/// Vandermonde-type product `F(θ)^α` with `F = Π_{j<k} |sin((θ^k−θ^j)/2)|`.
///
/// Defined for collided configurations as well (`F = 0` there); a negative
/// `α` at a collision yields `+∞`. Works on a raw slice so that collided
/// states, which [`AngleConfiguration`] rejects, can still be evaluated.
pub fn vandermonde_f_raw<S: Scalar>(angles: &[S], alpha: S) -> S {
    if angles.len() < 2 {
        return S::one();
    }
    // Evaluate through log F to avoid underflow for large n.
    let log_f = log_f_raw(angles);
    if log_f == S::neg_infinity() {
        if alpha > S::zero() {
            S::zero()
        } else if alpha < S::zero() {
            S::infinity()
        } else {
            S::one()
        }
    } else {
        (alpha * log_f).exp()
    }
}

/// `F(θ)^α` on a validated configuration; see [`vandermonde_f_raw`].
pub fn vandermonde_f<S: Scalar>(theta: &AngleConfiguration<S>, alpha: S) -> S {
    vandermonde_f_raw(theta.angles(), alpha)
}

/// Log potential `G_a(θ) = −a log F(θ) ≥ 0`; `+∞` at collisions.
pub fn log_potential_g<S: Scalar>(theta: &AngleConfiguration<S>, a: S) -> Result<S, CircleError> {
    if theta.is_singular() {
        return Err(CircleError::Singular);
    }
    Ok(-a * log_f_raw(theta.angles()))
}

/// Gap statistics of a configuration.
///
/// `argmin` lists every index `j` attaining the minimal gap
/// `θ^{j+1} − θ^j` (ties included; `j = n−1` denotes the wrap-around gap).
#[derive(Debug, Clone, PartialEq)]
pub struct GapStats<S> {
    /// Smallest circular gap `Δ ∈ [0, 2π/n]`.
    pub delta_min: S,
    /// `y = 2π/n − Δ ≥ 0`.
    pub y: S,
    /// `Y = max gap − 2π/n ≥ 0`.
    pub big_y: S,
    /// `d = max{y, Y}`; satisfies `d ≤ (n−1)·y`.
    pub d: S,
    /// All indices attaining the minimal gap.
    pub argmin: Vec<usize>,
}

pub fn gap_stats<S: Scalar>(theta: &AngleConfiguration<S>) -> GapStats<S> {
    gap_stats_raw(theta.angles())
}

pub(crate) fn gap_stats_raw<S: Scalar>(angles: &[S]) -> GapStats<S> {
    let n = angles.len();
    let even = S::two_pi() / S::from_usize(n).unwrap();
    let mut min = S::infinity();
    let mut max = S::neg_infinity();
    for j in 0..n {
        let g = gap_at(angles, j);
        min = min.min(g);
        max = max.max(g);
    }
    let argmin = (0..n).filter(|&j| gap_at(angles, j) == min).collect();
    let y = even - min;
    let big_y = max - even;
    GapStats {
        delta_min: min,
        y,
        big_y,
        d: y.max(big_y),
        argmin,
    }
}
