//! Time-step convergence and resource scaling reports.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use super::config::{Algorithm, Scenario, Topology};
use super::output::Table;
use super::run::TAG_CONVERGENCE;
use crate::collision::{trotter_gate_sequence, AlgorithmicCollision, CollisionConfig, CollisionMap, GateKind};
use crate::error::{Error, Result};
use crate::grid::SimulationGrid;
use crate::lindblad::oracle_series;
use crate::network::{algorithmic_qubits, complete_edges, cycle_edges, Coupling, ExcitonNetwork, MappingKind};
use crate::noise::{NoiseKind, NoiseProblem};
use crate::quantum::rng::RandomStream;
use crate::stats::accumulate;

pub const CONVERGENCE_FILE: &str = "convergence.csv";
pub const SCALING_FILE: &str = "scaling.csv";

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceLevel {
    pub dt: f64,
    /// Target population at the report time.
    pub value: f64,
    pub oracle: f64,
    /// Max-abs change of the target curve from the previous (coarser)
    /// level, over the coarsest sample times.
    pub change: Option<f64>,
}

impl ConvergenceLevel {
    pub fn error(&self) -> f64 {
        (self.value - self.oracle).abs()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub at: f64,
    pub levels: Vec<ConvergenceLevel>,
}

/// Least-squares slope of `log y` against `log x`; `None` with fewer than
/// two usable points.
pub fn fitted_order(points: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx = pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    let sxy = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>();
    (sxx > 0.0).then(|| sxy / sxx)
}

impl ConvergenceReport {
    /// Order fitted to the change between consecutive levels.
    pub fn change_order(&self) -> Option<f64> {
        let pts: Vec<_> = self.levels.iter().filter_map(|l| l.change.map(|c| (l.dt, c))).collect();
        fitted_order(&pts)
    }

    /// Order fitted to the error against the oracle at the report time.
    pub fn error_order(&self) -> Option<f64> {
        fitted_order(&self.levels.iter().map(|l| (l.dt, l.error())).collect::<Vec<_>>())
    }

    pub fn table(&self) -> Table {
        let mut t = Table::new(&["level", "dt", "t", "p_target", "p_oracle", "error", "max_change", "order"]);
        let order = self.change_order();
        for (k, l) in self.levels.iter().enumerate() {
            t.push(&[
                k.into(),
                l.dt.into(),
                self.at.into(),
                l.value.into(),
                l.oracle.into(),
                l.error().into(),
                l.change.into(),
                (k + 1 == self.levels.len()).then_some(order).flatten().into(),
            ]);
        }
        t
    }
}

/// Reruns the scenario at `dt, dt/2, …, dt/2^h`. Collision algorithms use
/// their outcome-averaged channels; classical noise averages
/// `grid.trajectories` exact-readout runs whose white noise is drawn once at
/// the finest step and summed pairwise for coarser levels.
pub fn convergence_report(scenario: &Scenario) -> Result<ConvergenceReport> {
    let cfg = &scenario.config;
    let h = cfg.convergence.halvings;
    let base = scenario.grid;
    let at = cfg.convergence.at.unwrap_or(base.horizon());
    let at_index = (at / base.dt).round() as usize;
    if at_index > base.steps || (at_index as f64 * base.dt - at).abs() > 1e-9 * at.max(1.0) {
        return Err(Error::config("convergence.at", "must be a sample time of the base grid"));
    }
    let grids: Vec<SimulationGrid> = (0..=h)
        .map(|k| {
            let f = 1usize << k;
            SimulationGrid {
                dt: base.dt / f as f64,
                steps: base.steps * f,
                ..base
            }
        })
        .collect();
    let network = &scenario.network;
    let (source, target) = (scenario.source, scenario.target);
    let curves: Vec<Vec<f64>> = match cfg.algorithm {
        Algorithm::Lindblad => grids
            .iter()
            .map(|g| Ok(oracle_series(network, g, source, target)?.target_curve()))
            .collect::<Result<_>>()?,
        Algorithm::Collision => grids
            .iter()
            .map(|g| {
                let cc = scenario.collision_config(network, g)?;
                let pops = CollisionMap::new(network, &cc, true)?.iterate(network.n_sites(), source, g.steps)?;
                Ok(pops.iter().map(|r| r[target]).collect())
            })
            .collect::<Result<_>>()?,
        Algorithm::CollisionAlgorithmic => grids
            .iter()
            .map(|g| {
                let model = AlgorithmicCollision::new(network, &scenario.collision_config(network, g)?)?;
                Ok(model.mean_populations(g, source)?.iter().map(|r| r[target]).collect())
            })
            .collect::<Result<_>>()?,
        Algorithm::ClassicalNoise => coupled_noise_curves(scenario, &grids)?,
    };
    let mut levels = Vec::with_capacity(grids.len());
    for (k, (g, curve)) in grids.iter().zip(&curves).enumerate() {
        let stride = 1usize << k;
        let oracle = oracle_series(network, g, source, target)?.target_curve()[at_index * stride];
        let change = (k > 0).then(|| {
            let prev = &curves[k - 1];
            (0..=base.steps)
                .map(|s| (curve[s * stride] - prev[s * stride / 2]).abs())
                .fold(0.0, f64::max)
        });
        levels.push(ConvergenceLevel {
            dt: g.dt,
            value: curve[at_index * stride],
            oracle,
            change,
        });
    }
    Ok(ConvergenceReport { at, levels })
}

fn coupled_noise_curves(scenario: &Scenario, grids: &[SimulationGrid]) -> Result<Vec<Vec<f64>>> {
    let cfg = &scenario.config;
    if cfg.noise.kind != NoiseKind::White {
        return Err(Error::config("noise.kind", "convergence reports support white noise only"));
    }
    let network = &scenario.network;
    let noise = scenario.noise_config(network)?;
    let problems = grids
        .iter()
        .map(|g| NoiseProblem::new(network, scenario.mapping, noise.clone(), *g, scenario.source, scenario.target, cfg.propagator))
        .collect::<Result<Vec<_>>>()?;
    let lens: Vec<usize> = grids.iter().map(SimulationGrid::n_samples).collect();
    let total: usize = lens.iter().sum();
    let finest = grids.last().expect("at least one level");
    let sd: Vec<f64> = noise.amplitudes.iter().map(|w| w.sqrt()).collect();
    let path = [scenario.hash, TAG_CONVERGENCE];
    let runs = scenario.grid.trajectories;
    let mean = accumulate(runs, total, finest.dt, |k| {
        let mut rng = RandomStream::new(cfg.seed, &[path[0], path[1], k as u64]);
        let mut draws: Vec<Vec<f64>> = (0..finest.steps)
            .map(|_| sd.iter().map(|s| s * rng.sample::<f64, _>(StandardNormal)).collect())
            .collect();
        let mut per_level = vec![Vec::new(); problems.len()];
        for level in (0..problems.len()).rev() {
            per_level[level] = problems[level].run_with_fluctuations(&draws)?;
            draws = draws
                .chunks(2)
                .map(|pair| pair[0].iter().zip(&pair[1]).map(|(a, b)| (a + b) / std::f64::consts::SQRT_2).collect())
                .collect();
        }
        Ok(per_level.concat())
    })?;
    let mut out = Vec::with_capacity(lens.len());
    let mut offset = 0;
    for len in lens {
        out.push(mean.mean[offset..offset + len].to_vec());
        offset += len;
    }
    Ok(out)
}

/// One row of the resource table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingRow {
    pub n_sites: usize,
    pub edges: usize,
    pub algorithm: Algorithm,
    pub mapping: MappingKind,
    pub qubits: usize,
    /// Gates per evolution block (all `m` Trotter substeps).
    pub gates: usize,
    pub two_qubit_gates: Option<usize>,
    /// `false` for closed-form estimates.
    pub measured: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingReport {
    pub topology: Topology,
    pub trotter: usize,
    pub rows: Vec<ScalingRow>,
}

impl ScalingReport {
    pub fn table(&self) -> Table {
        let mut t = Table::new(&[
            "n_sites",
            "topology",
            "edges",
            "algorithm",
            "mapping",
            "qubits",
            "gates_per_block",
            "two_qubit_gates",
            "source",
        ]);
        let topology = match self.topology {
            Topology::Ring => "ring",
            Topology::Complete => "complete",
            Topology::Chain => "chain",
            Topology::Custom => "custom",
        };
        for r in &self.rows {
            t.push(&[
                r.n_sites.into(),
                topology.into(),
                r.edges.into(),
                algorithm_name(r.algorithm).into(),
                mapping_name(r.mapping).into(),
                r.qubits.into(),
                r.gates.into(),
                r.two_qubit_gates.map(|g| g as u64).map_or(super::output::Cell::Empty, Into::into),
                (if r.measured { "measured" } else { "estimate" }).into(),
            ]);
        }
        t
    }
}

fn algorithm_name(a: Algorithm) -> &'static str {
    match a {
        Algorithm::Lindblad => "lindblad",
        Algorithm::ClassicalNoise => "classical_noise",
        Algorithm::Collision => "collision",
        Algorithm::CollisionAlgorithmic => "collision_algorithmic",
    }
}

fn mapping_name(m: MappingKind) -> &'static str {
    match m {
        MappingKind::Physical => "physical",
        MappingKind::Algorithmic => "algorithmic",
    }
}

/// Network of `n` degenerate sites with unit couplings on `topology`.
pub fn scaling_network(n: usize, topology: Topology) -> Result<ExcitonNetwork> {
    let edges = match topology {
        Topology::Ring if n >= 3 => cycle_edges(n),
        Topology::Ring | Topology::Chain => (1..n).map(|k| (k - 1, k)).collect(),
        Topology::Complete => complete_edges(n),
        Topology::Custom => return Err(Error::config("scaling.topology", "pick ring, chain or complete")),
    };
    let couplings = edges.into_iter().map(|(a, b)| Coupling { a, b, strength: 1.0 }).collect();
    ExcitonNetwork::new(vec![0.0; n], couplings, vec![1.0; n])
}

/// Physical-mapping counts are read off the generated gate sequence; the
/// classical-noise block is the same sequence without the collision gates
/// (the noise enters through the `RZ` angles). Algorithmic-mapping counts
/// are closed-form estimates on `n = ⌈log2 N⌉` qubits: a dense `4^n` bound
/// for the Hamiltonian factor plus `2^n` for the diagonal noise factor, or
/// `N · 2^(n+1)` for the per-site controlled phases of the collisions.
pub fn scaling_rows(n: usize, topology: Topology, algorithm: Algorithm, mapping: MappingKind, trotter: usize) -> Result<ScalingRow> {
    let network = scaling_network(n, topology)?;
    let edges = network.couplings().len();
    let collisions = matches!(algorithm, Algorithm::Collision | Algorithm::CollisionAlgorithmic);
    let ancilla = usize::from(collisions);
    match mapping {
        MappingKind::Physical => {
            let cfg = CollisionConfig::from_rates(&network, 0.01, trotter, MappingKind::Physical)?;
            let ops = trotter_gate_sequence(&network, &cfg)?;
            let kept: Vec<_> = ops
                .iter()
                .filter(|op| collisions || !matches!(op.kind, GateKind::RZX | GateKind::Reset))
                .collect();
            Ok(ScalingRow {
                n_sites: n,
                edges,
                algorithm,
                mapping,
                qubits: n + ancilla,
                gates: kept.len(),
                two_qubit_gates: Some(kept.iter().filter(|op| op.targets.len() == 2).count()),
                measured: true,
            })
        }
        MappingKind::Algorithmic => {
            let q = algorithmic_qubits(n);
            let dense = 1usize << (2 * q);
            let diagonal = if collisions { n * (1usize << (q + 1)) } else { 1usize << q };
            Ok(ScalingRow {
                n_sites: n,
                edges,
                algorithm,
                mapping,
                qubits: q + ancilla,
                gates: trotter * (dense + diagonal),
                two_qubit_gates: None,
                measured: false,
            })
        }
    }
}

pub fn scaling_report(scenario: &Scenario) -> Result<ScalingReport> {
    let cfg = &scenario.config;
    if cfg.algorithm == Algorithm::Lindblad {
        return Err(Error::config("algorithm", "scaling applies to the circuit algorithms"));
    }
    let rows = cfg
        .scaling
        .sizes
        .iter()
        .map(|&n| scaling_rows(n, cfg.scaling.topology, cfg.algorithm, scenario.mapping, scenario.grid.trotter))
        .collect::<Result<_>>()?;
    Ok(ScalingReport {
        topology: cfg.scaling.topology,
        trotter: scenario.grid.trotter,
        rows,
    })
}
