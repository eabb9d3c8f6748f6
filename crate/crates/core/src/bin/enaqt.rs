use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use enaqt::harness::config::{parse_mapping, Algorithm, Overrides, ScenarioConfig};
use enaqt::harness::run::{execute, Command};
use enaqt::Error;

/// Dephasing-assisted transport simulations.
#[derive(Parser)]
#[command(name = "enaqt", version)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Target-site population over time, with the master-equation overlay.
    Dynamics(Common),
    /// Transport efficiency over a log-spaced range of dephasing rates.
    Sweep(Common),
    /// Individual trajectories, their mean and (collisions) reset outcomes.
    Trajectories(Common),
    /// Rerun recorded collision outcomes from `<out>/bits.csv`.
    Replay(Common),
    /// Rerun at successively halved time steps.
    Converge(Common),
    /// Qubit and gate counts per evolution block.
    Scaling(Common),
}

#[derive(Args)]
#[command(allow_negative_numbers = true)]
struct Common {
    /// Scenario file (TOML).
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; defaults to the scenario's `output` or `out`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// lindblad, classical_noise, collision or collision_algorithmic.
    #[arg(long)]
    algorithm: Option<String>,
    /// physical or algorithmic.
    #[arg(long)]
    mapping: Option<String>,
    /// Time step.
    #[arg(long)]
    dt: Option<f64>,
    /// Horizon T.
    #[arg(long = "horizon", short = 'T')]
    horizon: Option<f64>,
    /// Number of trajectories or circuit runs.
    #[arg(long)]
    runs: Option<usize>,
    /// Uniform dephasing rate.
    #[arg(long)]
    gamma: Option<f64>,
}

fn run(command: Command, args: Common) -> Result<(), Error> {
    let overrides = Overrides {
        seed: args.seed,
        output: args.out,
        algorithm: args.algorithm.as_deref().map(str::parse::<Algorithm>).transpose()?,
        mapping: args.mapping.as_deref().map(parse_mapping).transpose()?,
        dt: args.dt,
        horizon: args.horizon,
        runs: args.runs,
        gamma: args.gamma,
    };
    let mut config = ScenarioConfig::load(&args.config)?;
    config.apply(&overrides);
    let scenario = config.resolve()?;
    let out_dir = scenario.config.output.clone().unwrap_or_else(|| PathBuf::from("out"));
    let manifest = execute(command, &scenario, &out_dir)?;
    for f in &manifest.outputs {
        println!("{}  {}", f.sha256, out_dir.join(&f.name).display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            return ExitCode::from(2);
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    let (command, args) = match cli.command {
        Sub::Dynamics(a) => (Command::Dynamics, a),
        Sub::Sweep(a) => (Command::Sweep, a),
        Sub::Trajectories(a) => (Command::Trajectories, a),
        Sub::Replay(a) => (Command::Replay, a),
        Sub::Converge(a) => (Command::Converge, a),
        Sub::Scaling(a) => (Command::Scaling, a),
    };
    match run(command, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
