use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mppi_cli::{cmd_bench, cmd_plan_once, cmd_simulate, BenchArgs, PlanOnceArgs, SimulateArgs};

#[derive(Parser)]
#[command(name = "mppi", version, about = "MPPI motion planner: closed-loop simulation and benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario in closed loop and write CSV, metrics and plots.
    Simulate {
        /// lane_merge, object_avoidance, vehicle_following, or a scenario file
        #[arg(long)]
        scenario: String,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        /// Plant integration step, s
        #[arg(long, default_value_t = 0.05)]
        plant_dt: f64,
        /// Replanning rate, Hz
        #[arg(long, default_value_t = 20.0)]
        hz: f64,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Plan a single cycle and print the horizon as CSV.
    PlanOnce {
        #[arg(long)]
        state: PathBuf,
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Time planning cycles and sweep the rollout count.
    Bench {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 50)]
        repeats: usize,
        #[arg(long)]
        workers: Option<usize>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut stdout = std::io::stdout().lock();
    let result = match cli.command {
        Command::Simulate {
            scenario,
            config,
            seed,
            out,
            plant_dt,
            hz,
            workers,
        } => cmd_simulate(
            &SimulateArgs {
                scenario,
                config,
                seed,
                out,
                plant_dt,
                hz,
                workers,
            },
            &mut std::io::stderr(),
        ),
        Command::PlanOnce {
            state,
            scene,
            config,
            seed,
            workers,
        } => cmd_plan_once(
            &PlanOnceArgs {
                state,
                scene,
                config,
                seed,
                workers,
            },
            &mut stdout,
        ),
        Command::Bench {
            config,
            repeats,
            workers,
        } => cmd_bench(
            &BenchArgs {
                config,
                repeats,
                workers,
            },
            &mut stdout,
        ),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
