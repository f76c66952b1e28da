//! `mrlab` — command-line front end of the multiradial Loewner / Dyson
//! circle laboratory.
//!
//! Subcommands: `simulate`, `energy`, `flow`, `trace`, `hull`, `ldp`,
//! `check`. Every run writes its artifacts plus a `manifest.json` into the
//! output directory. Exit codes: 0 success, 1 runtime error, 2 config
//! error, 3 check failure.

mod config;

use clap::{Parser, ValueEnum};
use config::{Config, EventKind};
use mrlab::acceptance::{
    run_all, write_check_artifacts, write_hull_csv, write_ldp_curve_csv, write_tail_table_csv,
    write_trace_csv,
};
use mrlab::circle::AngleConfiguration;
use mrlab::energy::energy_report;
use mrlab::flow::{convergence_report, zero_energy_flow};
use mrlab::ldp::{mc_ldp_curve, minimize_rate, tail_bound_check, EventSpec, MinimizeOptions};
use mrlab::loewner::{loewner_hull, trace, HullResolution, WeightFunction};
use mrlab::path::DrivingPath;
use mrlab::sde::{simulate_dyson_with_workers, simulate_weighted_with_workers, SimulationConfig};
use mrlab::svg;
use serde::Serialize;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Subcommand {
    /// Euler–Maruyama ensembles of the interacting diffusion.
    Simulate,
    /// Energy report for a driving path CSV.
    Energy,
    /// Zero-energy flow and its convergence report.
    Flow,
    /// Trace extraction by the backward Loewner flow.
    Trace,
    /// Hull cloud via swallowing times.
    Hull,
    /// Large-deviation curve, rate minimization, and tail table.
    Ldp,
    /// Full acceptance/invariant suite with a pass/fail summary.
    Check,
}

/// Numerical laboratory for Dyson Brownian motion on the circle and
/// multiradial Loewner evolution.
#[derive(Parser, Debug)]
#[command(version, about)]
struct Cli {
    #[arg(value_enum)]
    subcommand: Subcommand,
    /// TOML configuration file (missing sections take documented defaults).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed for every random ensemble.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory (default: $MRLAB_OUT_DIR or ./out).
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Worker threads for ensemble fan-out; results do not depend on it.
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Output format; `svg` additionally renders traces and hulls.
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Serialize)]
struct RunManifest<'a> {
    subcommand: &'a str,
    config: &'a Config,
    seed: u64,
    version: &'a str,
    outputs: Vec<String>,
    wall_clock_s: f64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = match &cli.config {
        Some(path) => match Config::from_file(path) {
            Ok(c) => c,
            Err(e) => {
                // the toml error carries line/column context
                eprintln!("config error in {}: {e}", path.display());
                return ExitCode::from(2);
            }
        },
        None => Config::default(),
    };
    let out_dir = cli
        .out_dir
        .clone()
        .or_else(|| std::env::var_os("MRLAB_OUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    if let Err(e) = std::fs::create_dir_all(&out_dir) {
        eprintln!("cannot create output directory {}: {e}", out_dir.display());
        return ExitCode::from(1);
    }

    let started = Instant::now();
    let result = match cli.subcommand {
        Subcommand::Simulate => run_simulate(&cli, &config, &out_dir),
        Subcommand::Energy => run_energy(&config, &out_dir),
        Subcommand::Flow => run_flow(&config, &out_dir),
        Subcommand::Trace => run_trace(&cli, &config, &out_dir),
        Subcommand::Hull => run_hull(&cli, &config, &out_dir),
        Subcommand::Ldp => run_ldp(&cli, &config, &out_dir),
        Subcommand::Check => run_check(&cli, &out_dir),
    };

    match result {
        Ok(outputs) => {
            let manifest = RunManifest {
                subcommand: subcommand_name(cli.subcommand),
                config: &config,
                seed: cli.seed,
                version: env!("CARGO_PKG_VERSION"),
                outputs: outputs.iter().map(|p| p.display().to_string()).collect(),
                wall_clock_s: started.elapsed().as_secs_f64(),
            };
            let manifest_path = out_dir.join("manifest.json");
            if let Err(e) = std::fs::write(
                &manifest_path,
                serde_json::to_string_pretty(&manifest).expect("manifest serializes"),
            ) {
                eprintln!("cannot write manifest: {e}");
                return ExitCode::from(1);
            }
            for p in &outputs {
                println!("wrote {}", p.display());
            }
            println!("wrote {}", manifest_path.display());
            ExitCode::SUCCESS
        }
        Err(RunError::Check) => ExitCode::from(3),
        Err(RunError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn subcommand_name(s: Subcommand) -> &'static str {
    match s {
        Subcommand::Simulate => "simulate",
        Subcommand::Energy => "energy",
        Subcommand::Flow => "flow",
        Subcommand::Trace => "trace",
        Subcommand::Hull => "hull",
        Subcommand::Ldp => "ldp",
        Subcommand::Check => "check",
    }
}

enum RunError {
    Runtime(String),
    Check,
}

impl<E: std::fmt::Display> From<E> for RunError {
    fn from(e: E) -> Self {
        RunError::Runtime(e.to_string())
    }
}

type RunResult = Result<Vec<PathBuf>, RunError>;

fn angle_config(angles: Vec<f64>) -> Result<AngleConfiguration<f64>, RunError> {
    AngleConfiguration::new(angles)
        .map_err(|e| RunError::Runtime(format!("invalid initial configuration: {e}")))
}

fn run_simulate(cli: &Cli, config: &Config, out_dir: &Path) -> RunResult {
    let s = &config.simulate;
    let theta0 = angle_config(config::resolve_theta0(&s.theta0, s.n, false))?;
    let mut cfg = SimulationConfig::new(theta0, s.kappa, s.a, s.t_final, s.dt);
    cfg.rho = s.rho;
    cfg.seed = cli.seed;
    cfg.ensemble = s.ensemble;
    cfg.eps_stop = s.eps_stop;
    let ensemble = if s.weighted {
        simulate_weighted_with_workers(&cfg, cli.workers)?
    } else {
        simulate_dyson_with_workers(&cfg, cli.workers)
    };

    let mut outputs = Vec::new();
    for (i, path) in ensemble.paths.iter().enumerate().take(s.save_paths) {
        let file = out_dir.join(format!("path_{i:05}.csv"));
        path.write_csv(File::create(&file)?)?;
        outputs.push(file);
    }

    #[derive(Serialize)]
    struct EnsembleSummary<'a> {
        n: usize,
        kappa: f64,
        a: f64,
        rho: f64,
        #[serde(rename = "T")]
        t_final: f64,
        dt: f64,
        ensemble: usize,
        scheme: &'a str,
        collisions: usize,
        collision_times: &'a [f64],
        eps_hit_times: Option<&'a [f64]>,
        weights: Option<&'a [f64]>,
        substep_cap_hits: usize,
    }
    let summary = EnsembleSummary {
        n: cfg.n(),
        kappa: s.kappa,
        a: s.a,
        rho: s.rho,
        t_final: s.t_final,
        dt: s.dt,
        ensemble: s.ensemble,
        scheme: if s.weighted { "weighted-brownian" } else { "direct" },
        collisions: ensemble.collision_times.iter().filter(|t| t.is_finite()).count(),
        collision_times: &ensemble.collision_times,
        eps_hit_times: ensemble.eps_hit_times.as_deref(),
        weights: ensemble.weights.as_deref(),
        substep_cap_hits: ensemble.substep_cap_hits,
    };
    let summary_path = out_dir.join("ensemble.json");
    std::fs::write(&summary_path, serde_json::to_string_pretty(&summary)?)?;
    outputs.push(summary_path);
    Ok(outputs)
}

fn run_energy(config: &Config, out_dir: &Path) -> RunResult {
    let e = &config.energy;
    let input = e
        .path
        .as_ref()
        .ok_or_else(|| RunError::Runtime("[energy] needs `path = \"file.csv\"`".into()))?;
    let path = DrivingPath::read_csv(BufReader::new(File::open(input)?))?;
    let report = energy_report(&path, e.kappa, e.a, e.rho);
    let out = out_dir.join("energy_report.json");
    std::fs::write(&out, serde_json::to_string_pretty(&report)?)?;
    Ok(vec![out])
}

fn run_flow(config: &Config, out_dir: &Path) -> RunResult {
    let f = &config.flow;
    let theta0 = angle_config(config::resolve_theta0(&f.theta0, f.n, true))?;
    let flow = zero_energy_flow(&theta0, f.t_final, f.step, f.a, f.rho)?;
    let per = mrlab::energy::multiradial_energy_intervals(&flow, f.a, f.rho).unwrap_or_default();
    let mut cumulative = Vec::with_capacity(flow.len());
    cumulative.push(0.0);
    for (i, c) in per.iter().enumerate() {
        let prev = cumulative[i];
        cumulative.push(prev + c);
    }
    let report = convergence_report(&flow, Some(&cumulative));

    let path_csv = out_dir.join("flow_path.csv");
    flow.write_csv(File::create(&path_csv)?)?;
    let report_json = out_dir.join("flow_report.json");
    std::fs::write(&report_json, serde_json::to_string_pretty(&report)?)?;
    Ok(vec![path_csv, report_json])
}

fn load_driver(
    file: &Option<String>,
    n: usize,
    t_final: f64,
    step: f64,
) -> Result<DrivingPath<f64>, RunError> {
    match file {
        Some(f) => Ok(DrivingPath::read_csv(BufReader::new(File::open(f)?))?),
        None => Ok(DrivingPath::from_fn(n, t_final, step, |_, j| {
            j as f64 * 2.0 * std::f64::consts::PI / n as f64
        })),
    }
}

fn run_trace(cli: &Cli, config: &Config, out_dir: &Path) -> RunResult {
    let t = &config.trace;
    let driver = load_driver(&t.path, t.n, t.t_final, t.step)?;
    let horizon = driver.last_time();
    let times: Vec<f64> =
        (0..=t.samples).map(|k| horizon * k as f64 / t.samples as f64).collect();
    let lam = WeightFunction::constant(t.lambda);
    let tr = trace(&driver, &times, t.y0, &lam)?;

    let csv = out_dir.join("trace.csv");
    write_trace_csv(&tr, File::create(&csv)?)?;
    let mut outputs = vec![csv];
    if cli.format == Format::Svg {
        let svg_path = out_dir.join("trace.svg");
        svg::render_trace(&tr, File::create(&svg_path)?)?;
        outputs.push(svg_path);
    }
    Ok(outputs)
}

fn run_hull(cli: &Cli, config: &Config, out_dir: &Path) -> RunResult {
    let h = &config.hull;
    let driver = load_driver(&h.path, h.n, h.t_final, h.step)?;
    let lam = WeightFunction::constant(h.lambda);
    let t_final = h.t_final.min(driver.last_time());
    let cloud = loewner_hull(
        &driver,
        t_final,
        HullResolution { radial: h.radial, angular: h.angular },
        &lam,
    )?;
    let csv = out_dir.join("hull.csv");
    write_hull_csv(&cloud, File::create(&csv)?)?;
    let mut outputs = vec![csv];
    if cli.format == Format::Svg {
        let svg_path = out_dir.join("hull.svg");
        svg::render_hull(&cloud, t_final, File::create(&svg_path)?)?;
        outputs.push(svg_path);
    }
    Ok(outputs)
}

fn run_ldp(cli: &Cli, config: &Config, out_dir: &Path) -> RunResult {
    let l = &config.ldp;
    let theta0 = angle_config(config::resolve_theta0(&l.theta0, l.n, false))?;
    let mut cfg = SimulationConfig::new(theta0.clone(), l.kappa_list[0], l.a, l.t_final, l.dt);
    cfg.seed = cli.seed;

    let event = match l.event {
        EventKind::SupBall => {
            let flow = zero_energy_flow(&theta0, l.t_final, l.dt.min(1e-2), l.a, 0.0)?;
            EventSpec::SupBall { center: flow, radius: l.radius }
        }
        EventKind::Endpoint => EventSpec::EndpointSet {
            target: theta0.rotated(l.shift),
            radius: l.radius,
        },
        EventKind::EpsGapHit => EventSpec::EpsGapHit {
            eps: l.eps.ok_or_else(|| {
                RunError::Runtime("[ldp] event eps_gap_hit needs `eps`".into())
            })?,
            t_final: l.t_final,
        },
    };

    let ensembles = vec![l.ensemble; l.kappa_list.len()];
    let curve = mc_ldp_curve(&event, &l.kappa_list, &ensembles, &cfg, cli.workers)?;
    let curve_csv = out_dir.join("ldp_curve.csv");
    write_ldp_curve_csv(&curve, File::create(&curve_csv)?)?;
    let mut outputs = vec![curve_csv];

    let rate = minimize_rate(
        &event,
        &theta0,
        l.t_final,
        l.grid_steps,
        l.a,
        0.0,
        MinimizeOptions::default(),
    );
    #[derive(Serialize)]
    struct RateSummary {
        feasible: bool,
        value: f64,
        iterations: usize,
        grad_norm: f64,
        error: Option<String>,
    }
    let summary = match &rate {
        Ok(r) => RateSummary {
            feasible: r.feasible,
            value: r.value,
            iterations: r.iterations,
            grad_norm: r.grad_norm,
            error: None,
        },
        Err(e) => RateSummary {
            feasible: false,
            value: f64::NAN,
            iterations: 0,
            grad_norm: f64::NAN,
            error: Some(e.to_string()),
        },
    };
    let rate_json = out_dir.join("rate_result.json");
    std::fs::write(&rate_json, serde_json::to_string_pretty(&summary)?)?;
    outputs.push(rate_json);
    if let Ok(r) = &rate {
        let minimizer_csv = out_dir.join("rate_minimizer.csv");
        r.path.write_csv(File::create(&minimizer_csv)?)?;
        outputs.push(minimizer_csv);
    }

    if l.tail {
        let rows = tail_bound_check(&l.eps_list, &l.kappa_list, &cfg, 0.05, l.min_tail_ensemble)?;
        let tail_csv = out_dir.join("tail_table.csv");
        write_tail_table_csv(&rows, File::create(&tail_csv)?)?;
        outputs.push(tail_csv);
    }
    Ok(outputs)
}

fn run_check(cli: &Cli, out_dir: &Path) -> RunResult {
    let outcomes = run_all(cli.seed);
    for o in &outcomes {
        println!("{}", o.line());
    }
    let all_passed = outcomes.iter().all(|o| o.passed);

    #[derive(Serialize)]
    struct CheckSummary<'a> {
        seed: u64,
        passed: bool,
        criteria: &'a [mrlab::acceptance::CriterionOutcome],
    }
    let summary_path = out_dir.join("check_summary.json");
    std::fs::write(
        &summary_path,
        serde_json::to_string_pretty(&CheckSummary {
            seed: cli.seed,
            passed: all_passed,
            criteria: &outcomes,
        })
        .expect("summary serializes"),
    )
    .map_err(|e| RunError::Runtime(e.to_string()))?;
    let mut outputs = write_check_artifacts(out_dir, cli.seed)
        .map_err(|e| RunError::Runtime(e.to_string()))?;
    outputs.insert(0, summary_path);

    if all_passed {
        Ok(outputs)
    } else {
        // artifacts and the manifest-less summary are still on disk
        for p in &outputs {
            println!("wrote {}", p.display());
        }
        eprintln!("check failed");
        Err(RunError::Check)
    }
}
