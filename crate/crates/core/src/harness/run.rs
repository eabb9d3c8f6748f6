//! Dynamics traces, efficiency sweeps, trajectory swarms and replay.

use std::path::Path;

use rayon::prelude::*;

use super::config::{Algorithm, CollisionChannel, Scenario};
use super::output::{read_csv, Cell, OutputSet, RunManifest, Table};
use crate::collision::{AlgorithmicCollision, CollisionBitString, CollisionCircuit, CollisionMap};
use crate::error::{Error, Result};
use crate::grid::SimulationGrid;
use crate::lindblad::{oracle_series, transport_efficiency, EfficiencyCurve};
use crate::network::ExcitonNetwork;
use crate::noise::NoiseProblem;
use crate::stats::EnsembleSeries;

/// Stream tags separating the random numbers of different commands.
pub(crate) const TAG_DYNAMICS: u64 = 1;
pub(crate) const TAG_SWEEP: u64 = 2;
pub(crate) const TAG_TRAJECTORIES: u64 = 3;
pub(crate) const TAG_CONVERGENCE: u64 = 4;

pub const DYNAMICS_FILE: &str = "dynamics.csv";
pub const SWEEP_FILE: &str = "sweep.csv";
pub const TRAJECTORIES_FILE: &str = "trajectories.csv";
pub const MEAN_FILE: &str = "trajectories_mean.csv";
pub const BITS_FILE: &str = "bits.csv";
pub const REPLAY_FILE: &str = "replay.csv";

fn deterministic(dt: f64, curve: Vec<f64>) -> Result<EnsembleSeries> {
    let eta = transport_efficiency(&curve, dt)?;
    Ok(EnsembleSeries {
        dt,
        count: 1,
        stderr: vec![0.0; curve.len()],
        mean: curve,
        efficiency: (eta, 0.0),
    })
}

/// Target-site series of the configured algorithm on `network` and `grid`.
/// Stochastic members use streams `(seed, path, k)`.
pub fn simulate(scenario: &Scenario, network: &ExcitonNetwork, grid: &SimulationGrid, path: &[u64]) -> Result<EnsembleSeries> {
    let cfg = &scenario.config;
    let (source, target) = (scenario.source, scenario.target);
    match cfg.algorithm {
        Algorithm::Lindblad => deterministic(grid.dt, oracle_series(network, grid, source, target)?.target_curve()),
        Algorithm::ClassicalNoise => NoiseProblem::new(
            network,
            scenario.mapping,
            scenario.noise_config(network)?,
            *grid,
            source,
            target,
            cfg.propagator,
        )?
        .ensemble(cfg.seed, path, grid.trajectories, cfg.readout),
        Algorithm::Collision => {
            let cc = scenario.collision_config(network, grid)?;
            match cfg.collision.channel {
                CollisionChannel::Circuit => CollisionCircuit::new(network, &cc)?.ensemble(
                    grid,
                    source,
                    target,
                    cfg.seed,
                    path,
                    grid.trajectories,
                    cfg.readout,
                ),
                CollisionChannel::ExactMap => {
                    let pops = CollisionMap::new(network, &cc, true)?.iterate(network.n_sites(), source, grid.steps)?;
                    deterministic(grid.dt, pops.iter().map(|row| row[target]).collect())
                }
            }
        }
        Algorithm::CollisionAlgorithmic => {
            let model = AlgorithmicCollision::new(network, &scenario.collision_config(network, grid)?)?;
            match cfg.collision.channel {
                CollisionChannel::Circuit => {
                    model.ensemble(grid, source, target, cfg.seed, path, grid.trajectories, cfg.readout)
                }
                CollisionChannel::ExactMap => {
                    let pops = model.mean_populations(grid, source)?;
                    deterministic(grid.dt, pops.iter().map(|row| row[target]).collect())
                }
            }
        }
    }
}

fn is_stochastic(scenario: &Scenario) -> bool {
    scenario.config.algorithm.is_stochastic() && scenario.config.collision.channel == CollisionChannel::Circuit
}

#[derive(Debug, Clone)]
pub struct DynamicsResult {
    pub series: EnsembleSeries,
    pub oracle: Vec<f64>,
    pub stochastic: bool,
}

impl DynamicsResult {
    pub fn table(&self) -> Table {
        let mut t = Table::new(&["s", "t", "p_target", "stderr", "p_oracle"]);
        for (s, (m, o)) in self.series.mean.iter().zip(&self.oracle).enumerate() {
            let err = self.stochastic.then(|| self.series.stderr[s]);
            t.push(&[s.into(), (s as f64 * self.series.dt).into(), (*m).into(), err.into(), (*o).into()]);
        }
        t
    }

    /// Largest `|p_target - p_oracle|`.
    pub fn max_deviation(&self) -> f64 {
        self.series.max_deviation(&self.oracle)
    }
}

pub fn run_dynamics(scenario: &Scenario) -> Result<DynamicsResult> {
    let series = simulate(scenario, &scenario.network, &scenario.grid, &[scenario.hash, TAG_DYNAMICS])?;
    let oracle = oracle_series(&scenario.network, &scenario.grid, scenario.source, scenario.target)?.target_curve();
    Ok(DynamicsResult {
        series,
        oracle,
        stochastic: is_stochastic(scenario),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub gamma: f64,
    pub dt: f64,
    pub eta: f64,
    pub stderr: f64,
    pub eta_oracle: f64,
    pub runs: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub points: Vec<SweepPoint>,
    pub stochastic: bool,
}

impl SweepResult {
    pub fn oracle_curve(&self) -> EfficiencyCurve {
        EfficiencyCurve {
            points: self.points.iter().map(|p| (p.gamma, p.eta_oracle)).collect(),
        }
    }

    pub fn algorithm_curve(&self) -> EfficiencyCurve {
        EfficiencyCurve {
            points: self.points.iter().map(|p| (p.gamma, p.eta)).collect(),
        }
    }

    pub fn table(&self) -> Table {
        let mut t = Table::new(&["gamma", "eta_algo", "eta_oracle", "stderr", "dt", "runs"]);
        for p in &self.points {
            t.push(&[
                p.gamma.into(),
                p.eta.into(),
                p.eta_oracle.into(),
                self.stochastic.then_some(p.stderr).into(),
                p.dt.into(),
                p.runs.into(),
            ]);
        }
        t
    }
}

/// Efficiency at every sweep rate. The noise amplitudes and collision
/// couplings are rebuilt from each uniform rate.
pub fn run_sweep(scenario: &Scenario) -> Result<SweepResult> {
    let spec = scenario
        .config
        .sweep
        .as_ref()
        .ok_or_else(|| Error::config("sweep", "the sweep command needs a [sweep] table"))?;
    let horizon = scenario.config.grid.horizon;
    let base = scenario.for_sweep();
    let mut points = Vec::new();
    for (k, gamma) in spec.values()?.into_iter().enumerate() {
        let network = scenario.network.with_uniform_dephasing(gamma)?;
        let dt = spec.step_for(gamma, scenario.grid.dt, horizon);
        let grid = SimulationGrid::from_horizon(horizon, dt)?
            .with_trajectories(scenario.grid.trajectories)
        .with_trotter(scenario.grid.trotter)
        .with_shots(scenario.grid.shots_per_point);
        let algo = simulate(&base, &network, &grid, &[scenario.hash, TAG_SWEEP, k as u64])?;
        let eta_oracle = oracle_series(&network, &grid, scenario.source, scenario.target)?.efficiency()?;
        points.push(SweepPoint {
            gamma,
            dt,
            eta: algo.efficiency.0,
            stderr: algo.efficiency.1,
            eta_oracle,
            runs: algo.count,
        });
    }
    Ok(SweepResult {
        points,
        stochastic: is_stochastic(scenario),
    })
}

/// Per-trajectory target series, their mean and the oracle overlay.
#[derive(Debug, Clone)]
pub struct TrajectorySet {
    pub dt: f64,
    pub curves: Vec<Vec<f64>>,
    pub bits: Option<Vec<CollisionBitString>>,
    pub oracle: Vec<f64>,
}

impl TrajectorySet {
    pub fn mean(&self) -> Result<EnsembleSeries> {
        let len = self.curves.first().map_or(0, Vec::len);
        crate::stats::accumulate(self.curves.len(), len, self.dt, |k| Ok(self.curves[k].clone()))
    }

    pub fn swarm_table(&self) -> Table {
        swarm_table(self.dt, &self.curves)
    }

    pub fn mean_table(&self) -> Result<Table> {
        let mean = self.mean()?;
        let mut t = Table::new(&["s", "t", "p_mean", "stderr", "p_oracle"]);
        for (s, o) in self.oracle.iter().enumerate() {
            t.push(&[
                s.into(),
                (s as f64 * self.dt).into(),
                mean.mean[s].into(),
                mean.stderr[s].into(),
                (*o).into(),
            ]);
        }
        Ok(t)
    }

    pub fn bits_table(&self) -> Option<Table> {
        let bits = self.bits.as_ref()?;
        let mut t = Table::new(&["trajectory", "n_sites", "steps", "trotter", "bits"]);
        for (xi, b) in bits.iter().enumerate() {
            t.push(&[xi.into(), b.n_sites.into(), b.steps.into(), b.trotter.into(), Cell::Text(b.to_hex())]);
        }
        Some(t)
    }
}

fn swarm_table(dt: f64, curves: &[Vec<f64>]) -> Table {
    let mut t = Table::new(&["trajectory", "s", "t", "p_target"]);
    for (xi, curve) in curves.iter().enumerate() {
        for (s, p) in curve.iter().enumerate() {
            t.push(&[xi.into(), s.into(), (s as f64 * dt).into(), (*p).into()]);
        }
    }
    t
}

/// Runs `trajectories.count` individual trajectories. With `record_bits`,
/// each stored curve is the exact replay of its recorded outcomes, so a
/// later replay reproduces the file byte for byte.
pub fn run_trajectories(scenario: &Scenario) -> Result<TrajectorySet> {
    let cfg = &scenario.config;
    let count = cfg.trajectories.count;
    let grid = &scenario.grid;
    let network = &scenario.network;
    let (source, target) = (scenario.source, scenario.target);
    let path = [scenario.hash, TAG_TRAJECTORIES];
    let ids: Vec<u64> = (0..count as u64).collect();
    let (curves, bits): (Vec<Vec<f64>>, Option<Vec<CollisionBitString>>) = match cfg.algorithm {
        Algorithm::Lindblad => {
            return Err(Error::config("algorithm", "trajectories need a stochastic algorithm"));
        }
        Algorithm::ClassicalNoise => {
            let problem = NoiseProblem::new(
                network,
                scenario.mapping,
                scenario.noise_config(network)?,
                *grid,
                source,
                target,
                cfg.propagator,
            )?;
            let curves = ids
                .par_iter()
                .map(|&id| Ok(problem.run_seeded(cfg.seed, &path, id, cfg.readout, false)?.estimator))
                .collect::<Result<_>>()?;
            (curves, None)
        }
        Algorithm::Collision => {
            let circuit = CollisionCircuit::new(network, &scenario.collision_config(network, grid)?)?;
            let record = cfg.trajectories.record_bits;
            let runs = ids
                .par_iter()
                .map(|&id| {
                    let run = circuit.run_seeded(grid, source, target, cfg.seed, &path, id, cfg.readout, record)?;
                    match run.bits {
                        Some(bits) => {
                            let pops = circuit.replay(grid, source, &bits)?;
                            Ok((pops.iter().map(|row| row[target]).collect(), Some(bits)))
                        }
                        None => Ok((run.record.estimator, None)),
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            let (curves, bits): (Vec<_>, Vec<_>) = runs.into_iter().unzip();
            (curves, record.then(|| bits.into_iter().flatten().collect()))
        }
        Algorithm::CollisionAlgorithmic => {
            let model = AlgorithmicCollision::new(network, &scenario.collision_config(network, grid)?)?;
            let curves = ids
                .par_iter()
                .map(|&id| Ok(model.run_seeded(grid, source, target, cfg.seed, &path, id, cfg.readout)?.estimator))
                .collect::<Result<_>>()?;
            (curves, None)
        }
    };
    Ok(TrajectorySet {
        dt: grid.dt,
        curves,
        bits,
        oracle: oracle_series(network, grid, source, target)?.target_curve(),
    })
}

/// Reads recorded bit strings and reruns each collision trajectory.
pub fn replay_bits(scenario: &Scenario, bits_file: &Path) -> Result<Vec<Vec<f64>>> {
    if scenario.config.algorithm != Algorithm::Collision {
        return Err(Error::config("algorithm", "replay needs the collision algorithm"));
    }
    let (header, rows) = read_csv(bits_file)?;
    let col = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::config(bits_file.display().to_string(), format!("missing column {name}")))
    };
    let (c_n, c_s, c_m, c_b) = (col("n_sites")?, col("steps")?, col("trotter")?, col("bits")?);
    let grid = &scenario.grid;
    let circuit = CollisionCircuit::new(&scenario.network, &scenario.collision_config(&scenario.network, grid)?)?;
    let parse = |k: usize, v: &str| {
        v.parse::<usize>()
            .map_err(|e| Error::config(format!("{}:{}", bits_file.display(), k + 2), e.to_string()))
    };
    rows.par_iter()
        .enumerate()
        .map(|(k, row)| {
            let (n, steps, trotter) = (parse(k, &row[c_n])?, parse(k, &row[c_s])?, parse(k, &row[c_m])?);
            if (n, steps, trotter) != (scenario.network.n_sites(), grid.steps, grid.trotter) {
                return Err(Error::config(
                    format!("{}:{}", bits_file.display(), k + 2),
                    "bit string was recorded for a different network or grid",
                ));
            }
            let bits = CollisionBitString::from_hex(&row[c_b], n, steps, trotter)?;
            let pops = circuit.replay(grid, scenario.source, &bits)?;
            Ok(pops.iter().map(|r| r[scenario.target]).collect())
        })
        .collect()
}

/// Subcommands understood by [`execute`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Dynamics,
    Sweep,
    Trajectories,
    Replay,
    Converge,
    Scaling,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Dynamics => "dynamics",
            Command::Sweep => "sweep",
            Command::Trajectories => "trajectories",
            Command::Replay => "replay",
            Command::Converge => "converge",
            Command::Scaling => "scaling",
        }
    }
}

/// Runs `command` and writes its files plus a manifest into `out_dir`.
/// `replay` reads `bits.csv` from the same directory.
pub fn execute(command: Command, scenario: &Scenario, out_dir: &Path) -> Result<RunManifest> {
    let mut out = OutputSet::create(out_dir)?;
    match command {
        Command::Dynamics => {
            out.write_table(DYNAMICS_FILE, &run_dynamics(scenario)?.table())?;
        }
        Command::Sweep => {
            out.write_table(SWEEP_FILE, &run_sweep(scenario)?.table())?;
        }
        Command::Trajectories => {
            let set = run_trajectories(scenario)?;
            out.write_table(TRAJECTORIES_FILE, &set.swarm_table())?;
            out.write_table(MEAN_FILE, &set.mean_table()?)?;
            if let Some(t) = set.bits_table() {
                out.write_table(BITS_FILE, &t)?;
            }
        }
        Command::Replay => {
            let curves = replay_bits(scenario, &out_dir.join(BITS_FILE))?;
            out.write_table(REPLAY_FILE, &swarm_table(scenario.grid.dt, &curves))?;
        }
        Command::Converge => {
            let report = super::report::convergence_report(scenario)?;
            out.write_table(super::report::CONVERGENCE_FILE, &report.table())?;
        }
        Command::Scaling => {
            let report = super::report::scaling_report(scenario)?;
            out.write_table(super::report::SCALING_FILE, &report.table())?;
        }
    }
    let config = scenario.config.to_toml()?;
    out.finish(command.name(), scenario.config.seed, scenario.hash, &config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::ScenarioConfig;

    fn scenario(algorithm: &str, extra: &str) -> Scenario {
        let text = format!(
            "algorithm = \"{algorithm}\"\nseed = 3\nsource = 1\ntarget = 3\n{extra}\n[network]\nenergies = [0.44, 0.24, -3.22, 0.36]\ngamma = 0.5\n[grid]\ndt = 0.05\nhorizon = 2.0\ntrajectories = 64\n[trajectories]\ncount = 6\n"
        );
        ScenarioConfig::from_toml(&text).unwrap().resolve().unwrap()
    }

    #[test]
    fn lindblad_dynamics_equals_oracle() {
        let r = run_dynamics(&scenario("lindblad", "")).unwrap();
        assert_eq!(r.series.mean, r.oracle);
        assert!(!r.stochastic);
        let text = r.table().render();
        assert!(text.starts_with("s,t,p_target,stderr,p_oracle\n0,0.0,0.0,,0.0\n"));
        assert_eq!(text.lines().count(), 42);
    }

    #[test]
    fn stochastic_dynamics_have_stderr() {
        for alg in ["classical_noise", "collision", "collision_algorithmic"] {
            let r = run_dynamics(&scenario(alg, "")).unwrap();
            assert!(r.stochastic);
            assert_eq!(r.series.count, 64);
            assert!(*r.series.stderr.last().unwrap() > 0.0, "{alg}");
            assert!(r.max_deviation() < 0.1, "{alg}: {}", r.max_deviation());
        }
    }

    #[test]
    fn dynamics_are_deterministic() {
        let s = scenario("collision", "readout = \"single_shot\"");
        assert_eq!(run_dynamics(&s).unwrap().table(), run_dynamics(&s).unwrap().table());
    }

    #[test]
    fn exact_map_channels_are_deterministic() {
        let a = run_dynamics(&scenario("collision", "[collision]\nchannel = \"exact_map\"")).unwrap();
        let b = run_dynamics(&scenario("collision_algorithmic", "[collision]\nchannel = \"exact_map\"")).unwrap();
        assert!(!a.stochastic && !b.stochastic);
        assert!(a.max_deviation() < 0.02 && b.max_deviation() < 0.02);
    }

    #[test]
    fn sweep_needs_table_and_reports_each_point() {
        let s = scenario("lindblad", "");
        assert!(matches!(run_sweep(&s), Err(Error::Config { .. })));
        let s = scenario("classical_noise", "[sweep]\nmin = 0.1\nmax = 10.0\npoints = 3\nmax_gamma_dt = 0.1");
        let r = run_sweep(&s).unwrap();
        assert_eq!(r.points.len(), 3);
        assert_eq!(r.points[0].dt, 0.05);
        assert!((r.points[2].dt - 0.01).abs() < 1e-15);
        for p in &r.points {
            assert!((p.eta - p.eta_oracle).abs() < 5.0 * p.stderr + 0.05, "{p:?}");
        }
        assert_eq!(r.table().render().lines().count(), 4);
    }

    #[test]
    fn trajectories_record_and_replay() {
        let text = "algorithm = \"collision\"\nseed = 3\nsource = 1\ntarget = 3\n[network]\nenergies = [0.44, 0.24, -3.22, 0.36]\ngamma = 0.5\n[grid]\ndt = 0.05\nhorizon = 2.0\n[trajectories]\ncount = 5\nrecord_bits = true\n";
        let s = ScenarioConfig::from_toml(text).unwrap().resolve().unwrap();
        let dir = tempfile::tempdir().unwrap();
        execute(Command::Trajectories, &s, dir.path()).unwrap();
        execute(Command::Replay, &s, dir.path()).unwrap();
        let a = std::fs::read(dir.path().join(TRAJECTORIES_FILE)).unwrap();
        let b = std::fs::read(dir.path().join(REPLAY_FILE)).unwrap();
        assert_eq!(a, b);
        let (_, rows) = read_csv(&dir.path().join(BITS_FILE)).unwrap();
        assert_eq!(rows.len(), 5);
    }

    #[test]
    fn trajectories_reject_lindblad() {
        assert!(matches!(run_trajectories(&scenario("lindblad", "")), Err(Error::Config { .. })));
    }
}
