//! Command implementations behind the `mppi` binary. Each command returns a
//! process exit code; usage problems come back as [`CliError::Usage`].

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use mppi::report::{self, MetricsSummary};
use mppi::scene::Scene;
use mppi::sim::{self, builtin_scenario, Scenario, SceneFile, SimOptions};
use mppi::{Backend, InputSequence, Planner, PlannerConfig, VehicleState};

pub mod exit {
    pub const OK: i32 = 0;
    /// The run ended without completing (planner fault, blocked, I/O).
    pub const FAILED: i32 = 1;
    pub const USAGE: i32 = 2;
    pub const COLLISION: i32 = 3;
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Runtime(#[from] anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => exit::USAGE,
            CliError::Runtime(_) => exit::FAILED,
        }
    }
}

fn usage(context: &str, err: impl std::fmt::Display) -> CliError {
    CliError::Usage(format!("{context}: {err}"))
}

pub fn load_config(path: Option<&Path>) -> Result<PlannerConfig, CliError> {
    match path {
        None => Ok(PlannerConfig::default()),
        Some(p) => PlannerConfig::load(p).map_err(|e| usage(&format!("config {}", p.display()), e)),
    }
}

fn backend(workers: Option<usize>) -> Backend {
    match workers {
        Some(n) => Backend::with_workers(n),
        None => Backend::default(),
    }
}

/// A built-in name, or else a scenario file.
pub fn resolve_scenario(arg: &str) -> Result<Scenario, CliError> {
    match builtin_scenario(arg) {
        Ok(s) => Ok(s),
        Err(mppi::Error::UnknownScenario(_)) if Path::new(arg).exists() => {
            Scenario::load(Path::new(arg)).map_err(|e| usage(&format!("scenario {arg}"), e))
        }
        Err(e) => Err(usage("scenario", e)),
    }
}

#[derive(Debug, Clone)]
pub struct SimulateArgs {
    pub scenario: String,
    pub config: Option<PathBuf>,
    pub seed: Option<u64>,
    pub out: PathBuf,
    pub plant_dt: f64,
    pub hz: f64,
    pub workers: Option<usize>,
}

pub fn cmd_simulate(args: &SimulateArgs, log_to: &mut dyn Write) -> Result<i32, CliError> {
    let mut config = load_config(args.config.as_deref())?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    let scenario = resolve_scenario(&args.scenario)?;
    let options = SimOptions {
        plant_dt: args.plant_dt,
        replan_hz: args.hz,
        backend: backend(args.workers),
        ..SimOptions::default()
    };
    let log = match sim::run(&scenario, &config, &options) {
        Ok(log) => log,
        Err(e @ mppi::Error::InvalidParameter { .. }) => return Err(usage("simulate", e)),
        Err(e) => return Err(anyhow::Error::new(e).context("simulation failed").into()),
    };

    fs::create_dir_all(&args.out)
        .map_err(|e| anyhow::anyhow!("cannot create {}: {e}", args.out.display()))?;
    let write = |name: &str, body: &[u8]| -> anyhow::Result<()> {
        let path = args.out.join(name);
        fs::write(&path, body).map_err(|e| anyhow::anyhow!("cannot write {}: {e}", path.display()))
    };
    let mut csv = Vec::new();
    report::write_trajectory_csv(&mut csv, &log.records).map_err(anyhow::Error::new)?;
    write("trajectory.csv", &csv)?;
    let metrics = MetricsSummary::from_log(&log);
    write("metrics.json", metrics.to_json().as_bytes())?;

    let reference: Vec<[f64; 2]> = scenario.path.waypoints().iter().map(|w| [w.x, w.y]).collect();
    let last_t = log.records.last().map_or(0.0, |r| r.t);
    let circles = Scene::new(scenario.obstacles.clone(), config.obstacle_margin)
        .map_err(anyhow::Error::new)?
        .circles_at(last_t);
    for (name, svg) in report::run_plots(&log.records, &reference, &circles) {
        write(name, svg.as_bytes())?;
    }

    let _ = writeln!(
        log_to,
        "{}: {:?} after {:.2} s, max speed {:.3} m/s, p95 cycle {:.2} ms -> {}",
        scenario.kind.name(),
        log.outcome,
        last_t,
        metrics.max_speed,
        metrics.p95_cycle_ms,
        args.out.display()
    );
    Ok(if metrics.collision {
        exit::COLLISION
    } else if metrics.completed {
        exit::OK
    } else {
        exit::FAILED
    })
}

#[derive(Debug, Clone)]
pub struct PlanOnceArgs {
    pub state: PathBuf,
    pub scene: PathBuf,
    pub config: Option<PathBuf>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
}

pub const PLAN_COLUMNS: &str = "step,t_s,x_m,y_m,theta_rad,v_mps,delta_rad,a_cmd,omega_cmd";

/// Plans one cycle from a cold start and prints the horizon as CSV: one row
/// per step with the state at that step and the input applied from it.
pub fn cmd_plan_once(args: &PlanOnceArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let mut config = load_config(args.config.as_deref())?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    let text = fs::read_to_string(&args.state).map_err(|e| usage(&format!("state {}", args.state.display()), e))?;
    let state: VehicleState = toml::from_str(&text).map_err(|e| usage(&format!("state {}", args.state.display()), e))?;
    let scene_file = SceneFile::load(&args.scene).map_err(|e| usage(&format!("scene {}", args.scene.display()), e))?;
    let path = scene_file
        .reference_path()
        .map_err(|e| usage(&format!("scene {}", args.scene.display()), e))?;
    let scene = Scene::new(scene_file.obstacles.clone(), config.obstacle_margin)
        .map_err(|e| usage(&format!("scene {}", args.scene.display()), e))?;
    config.weights.avoidance_gate = scene_file.avoidance_gate;

    let horizon = config.horizon;
    let dt = config.dt();
    let mut planner = Planner::with_backend(config, backend(args.workers)).map_err(|e| usage("config", e))?;
    let (plan, _) = planner
        .plan_cycle(&state, &scene, 0.0, &path, &InputSequence::zeros(horizon))
        .map_err(|e| anyhow::Error::new(e).context("planning failed"))?;

    let mut body = String::from(PLAN_COLUMNS);
    body.push('\n');
    for (k, (s, u)) in plan.states.iter().zip(&plan.inputs).enumerate() {
        body.push_str(&format!(
            "{k},{},{},{},{},{},{},{},{}\n",
            k as f64 * dt,
            s.x,
            s.y,
            s.theta,
            s.v,
            s.delta,
            u.a,
            u.omega
        ));
    }
    out.write_all(body.as_bytes()).map_err(anyhow::Error::new)?;
    Ok(exit::OK)
}

#[derive(Debug, Clone)]
pub struct BenchArgs {
    pub config: Option<PathBuf>,
    pub repeats: usize,
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct BenchRow {
    pub rollouts: usize,
    pub horizon: usize,
    pub samples: usize,
    pub mean_ms: f64,
    pub p95_ms: f64,
    pub rollouts_per_s: f64,
}

pub const SWEEP: [usize; 4] = [320, 640, 1280, 2560];

/// Times `repeats` planning cycles after one warm-up cycle.
pub fn time_plan_cycle(config: &PlannerConfig, repeats: usize, backend: Backend) -> anyhow::Result<BenchRow> {
    let scenario = builtin_scenario("object_avoidance")?;
    let scene = Scene::new(scenario.obstacles.clone(), config.obstacle_margin)?;
    let state = VehicleState::new(40.0, 1.0, 0.05, 8.0, 0.0);
    let mut cfg = config.clone();
    cfg.weights.avoidance_gate = true;
    let mut planner = Planner::with_backend(cfg, backend)?;
    let mut warm = InputSequence::zeros(config.horizon);
    let mut samples = Vec::with_capacity(repeats);
    for i in 0..=repeats {
        let started = Instant::now();
        let (_, next) = planner.plan_cycle(&state, &scene, 0.0, &scenario.path, &warm)?;
        let ms = started.elapsed().as_secs_f64() * 1e3;
        warm = next;
        if i > 0 {
            samples.push(ms);
        }
    }
    let mean_ms = report::mean(&samples);
    Ok(BenchRow {
        rollouts: config.rollouts,
        horizon: config.horizon,
        samples: samples.len(),
        mean_ms,
        p95_ms: report::percentile(&samples, 0.95),
        rollouts_per_s: config.rollouts as f64 / (mean_ms / 1e3),
    })
}

pub fn cmd_bench(args: &BenchArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    if args.repeats == 0 {
        return Err(CliError::Usage("bench: --repeats must be at least 1".into()));
    }
    let config = load_config(args.config.as_deref())?;
    let backend = backend(args.workers);
    let row = time_plan_cycle(&config, args.repeats, backend.clone())?;
    let mut text = format!(
        "plan_cycle M={} T={} workers={}: mean {:.3} ms, p95 {:.3} ms, {:.0} rollouts/s ({} samples)\n",
        row.rollouts,
        row.horizon,
        backend.workers(),
        row.mean_ms,
        row.p95_ms,
        row.rollouts_per_s,
        row.samples
    );
    text.push_str("M sweep:\n  M      mean_ms   p95_ms   rollouts/s  vs_M=320\n");
    let mut base = None;
    for m in SWEEP {
        let cfg = PlannerConfig {
            rollouts: m,
            ..config.clone()
        };
        let r = time_plan_cycle(&cfg, args.repeats, backend.clone())?;
        let b = *base.get_or_insert(r.mean_ms);
        text.push_str(&format!(
            "  {:<6} {:>8.3} {:>8.3} {:>12.0}  {:>7.2}x\n",
            m,
            r.mean_ms,
            r.p95_ms,
            r.rollouts_per_s,
            r.mean_ms / b
        ));
    }
    out.write_all(text.as_bytes()).map_err(anyhow::Error::new)?;
    Ok(exit::OK)
}
