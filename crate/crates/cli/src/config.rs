//! Configuration file (TOML, one section per subcommand) with documented
//! defaults. Command-line flags override file values; a run's manifest
//! records the resolved snapshot.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

fn default_n() -> usize {
    2
}
fn default_a() -> f64 {
    4.0
}
fn default_kappa() -> f64 {
    1.0
}
fn default_t() -> f64 {
    0.5
}
fn default_dt() -> f64 {
    1e-3
}
fn default_ensemble() -> usize {
    100
}
fn default_flow_t() -> f64 {
    3.0
}
fn default_lambda() -> f64 {
    1.0
}
fn default_y0() -> f64 {
    1e-4
}
fn default_trace_samples() -> usize {
    20
}
fn default_hull_res() -> usize {
    512
}
fn default_kappa_list() -> Vec<f64> {
    vec![1.0, 0.5, 0.25, 0.125]
}
fn default_radius() -> f64 {
    0.5
}
fn default_eps_list() -> Vec<f64> {
    vec![0.2, 0.3]
}
fn default_grid_steps() -> usize {
    200
}
fn default_ldp_ensemble() -> usize {
    20_000
}
fn default_min_tail_ensemble() -> u64 {
    20_000
}

/// Direct simulation of the interacting diffusion (or its reweighted
/// Brownian representation).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSection {
    /// Particle count; `theta0` defaults to the equally spaced configuration.
    #[serde(default = "default_n")]
    pub n: usize,
    /// Initial angles (radians, strictly increasing, span < 2π).
    #[serde(default)]
    pub theta0: Option<Vec<f64>>,
    #[serde(default = "default_kappa")]
    pub kappa: f64,
    #[serde(default = "default_a")]
    pub a: f64,
    #[serde(default)]
    pub rho: f64,
    #[serde(default = "default_t", rename = "T")]
    pub t_final: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_ensemble")]
    pub ensemble: usize,
    /// Record the first time the smallest gap drops below this value.
    #[serde(default)]
    pub eps_stop: Option<f64>,
    /// Use the Girsanov-reweighted Brownian scheme instead of the direct one.
    #[serde(default)]
    pub weighted: bool,
    /// How many member paths to write as CSV files (the manifest always
    /// records stopping statistics for the full ensemble).
    #[serde(default = "default_ensemble")]
    pub save_paths: usize,
}

impl Default for SimulateSection {
    fn default() -> Self {
        toml::from_str("").expect("empty simulate section has defaults")
    }
}

/// Energy-report evaluation of a driving path stored as CSV.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct EnergySection {
    /// Input path CSV (header `t,theta1,...`); required.
    pub path: Option<String>,
    #[serde(default)]
    pub kappa: f64,
    #[serde(default = "default_a")]
    pub a: f64,
    #[serde(default)]
    pub rho: f64,
}

/// Deterministic zero-energy flow.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowSection {
    #[serde(default = "default_n")]
    pub n: usize,
    /// Defaults to `(0, π/2)` for n = 2, equally spaced otherwise.
    #[serde(default)]
    pub theta0: Option<Vec<f64>>,
    #[serde(default = "default_flow_t", rename = "T")]
    pub t_final: f64,
    #[serde(default = "default_dt")]
    pub step: f64,
    #[serde(default = "default_a")]
    pub a: f64,
    #[serde(default)]
    pub rho: f64,
}

impl Default for FlowSection {
    fn default() -> Self {
        toml::from_str("").expect("empty flow section has defaults")
    }
}

/// Trace extraction for a driver (from CSV, or a constant driver).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceSection {
    /// Driver CSV; when absent a constant equally spaced driver is used.
    #[serde(default)]
    pub path: Option<String>,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_t", rename = "T")]
    pub t_final: f64,
    #[serde(default = "default_dt")]
    pub step: f64,
    /// Number of equispaced sample times on `(0, T]`.
    #[serde(default = "default_trace_samples")]
    pub samples: usize,
    #[serde(default = "default_y0")]
    pub y0: f64,
    /// Constant weight λ.
    #[serde(default = "default_lambda")]
    pub lambda: f64,
}

impl Default for TraceSection {
    fn default() -> Self {
        toml::from_str("").expect("empty trace section has defaults")
    }
}

/// Hull cloud via swallowing times on a polar grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HullSection {
    #[serde(default)]
    pub path: Option<String>,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_t", rename = "T")]
    pub t_final: f64,
    #[serde(default = "default_dt")]
    pub step: f64,
    #[serde(default = "default_hull_res")]
    pub radial: usize,
    #[serde(default = "default_hull_res")]
    pub angular: usize,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
}

impl Default for HullSection {
    fn default() -> Self {
        toml::from_str("").expect("empty hull section has defaults")
    }
}

/// Large-deviation experiments: κ-curve for an event, rate minimization,
/// and the collision tail table.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LdpSection {
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default)]
    pub theta0: Option<Vec<f64>>,
    #[serde(default = "default_kappa_list")]
    pub kappa_list: Vec<f64>,
    #[serde(default = "default_ldp_ensemble")]
    pub ensemble: usize,
    #[serde(default = "default_t", rename = "T")]
    pub t_final: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_a")]
    pub a: f64,
    /// Event kind: `sup_ball` (around the zero-energy flow),
    /// `endpoint` (ball around the rotated start), or `eps_gap_hit`.
    #[serde(default)]
    pub event: EventKind,
    #[serde(default = "default_radius")]
    pub radius: f64,
    /// Endpoint rotation for the `endpoint` event.
    #[serde(default)]
    pub shift: f64,
    /// Gap threshold for the `eps_gap_hit` event.
    #[serde(default)]
    pub eps: Option<f64>,
    /// Also run the tail-bound table on `eps_list × kappa_list`.
    #[serde(default)]
    pub tail: bool,
    #[serde(default = "default_eps_list")]
    pub eps_list: Vec<f64>,
    #[serde(default = "default_min_tail_ensemble")]
    pub min_tail_ensemble: u64,
    /// Grid steps of the rate minimizer.
    #[serde(default = "default_grid_steps")]
    pub grid_steps: usize,
}

impl Default for LdpSection {
    fn default() -> Self {
        toml::from_str("").expect("empty ldp section has defaults")
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, Default, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    #[default]
    SupBall,
    Endpoint,
    EpsGapHit,
}

/// Full configuration file.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub simulate: SimulateSection,
    #[serde(default)]
    pub energy: EnergySection,
    #[serde(default)]
    pub flow: FlowSection,
    #[serde(default)]
    pub trace: TraceSection,
    #[serde(default)]
    pub hull: HullSection,
    #[serde(default)]
    pub ldp: LdpSection,
}

impl Config {
    pub fn from_file(path: &std::path::Path) -> Result<Self, toml::de::Error> {
        let text = std::fs::read_to_string(path).unwrap_or_default();
        toml::from_str(&text)
    }
}

/// `theta0` resolution shared by the sections: explicit list, or equally
/// spaced (for `flow` with n = 2, the quarter-gap start `(0, π/2)`).
pub fn resolve_theta0(explicit: &Option<Vec<f64>>, n: usize, flow_default: bool) -> Vec<f64> {
    if let Some(t) = explicit {
        return t.clone();
    }
    if flow_default && n == 2 {
        return vec![0.0, PI / 2.0];
    }
    (0..n).map(|j| j as f64 * 2.0 * PI / n as f64).collect()
}
