//! Scenario files.
//!
//! Scenarios are TOML documents. Site labels in files (and on the command
//! line) are 1-based; everything inside the library is 0-based.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::collision::CollisionConfig;
use crate::error::{Error, Result};
use crate::grid::SimulationGrid;
use crate::network::{complete_edges, cycle_edges, Coupling, ExcitonNetwork, MappingKind};
use crate::noise::{NoiseConfig, NoiseKind, PropagatorMode, Readout};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Lindblad,
    ClassicalNoise,
    Collision,
    CollisionAlgorithmic,
}

impl Algorithm {
    pub fn is_stochastic(self) -> bool {
        self != Algorithm::Lindblad
    }

    /// Register encoding used when the scenario does not name one.
    pub fn default_mapping(self) -> MappingKind {
        match self {
            Algorithm::Lindblad | Algorithm::Collision => MappingKind::Physical,
            Algorithm::ClassicalNoise | Algorithm::CollisionAlgorithmic => MappingKind::Algorithmic,
        }
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lindblad" => Ok(Algorithm::Lindblad),
            "classical_noise" => Ok(Algorithm::ClassicalNoise),
            "collision" => Ok(Algorithm::Collision),
            "collision_algorithmic" => Ok(Algorithm::CollisionAlgorithmic),
            other => Err(Error::config("algorithm", format!("unknown algorithm {other:?}"))),
        }
    }
}

pub fn parse_mapping(s: &str) -> Result<MappingKind> {
    match s {
        "physical" => Ok(MappingKind::Physical),
        "algorithmic" => Ok(MappingKind::Algorithmic),
        other => Err(Error::config("mapping", format!("unknown mapping {other:?}"))),
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    #[default]
    Ring,
    Complete,
    Chain,
    /// Only the listed `couplings`.
    Custom,
}

/// Coupling between 1-based sites.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingSpec {
    pub a: usize,
    pub b: usize,
    pub strength: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSpec {
    /// Another TOML file holding the network table; relative to the scenario.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub energies: Option<Vec<f64>>,
    #[serde(default)]
    pub topology: Topology,
    /// Uniform coupling for generated topologies.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coupling: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub couplings: Option<Vec<CouplingSpec>>,
    /// Uniform dephasing rate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    /// Per-site dephasing rates; overrides `gamma`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dephasing: Option<Vec<f64>>,
}

impl NetworkSpec {
    pub fn build(&self, base: Option<&Path>) -> Result<ExcitonNetwork> {
        if let Some(file) = &self.file {
            let path = match base {
                Some(dir) if file.is_relative() => dir.join(file),
                _ => file.clone(),
            };
            let text = std::fs::read_to_string(&path)
                .map_err(|e| Error::config("network.file", format!("{}: {e}", path.display())))?;
            let inner: NetworkSpec =
                toml::from_str(&text).map_err(|e| Error::config("network.file", format!("{}: {e}", path.display())))?;
            if inner.file.is_some() {
                return Err(Error::config("network.file", "nested network files are not supported"));
            }
            return inner.build(None);
        }
        let energies = self
            .energies
            .clone()
            .ok_or_else(|| Error::config("network.energies", "missing (or give network.file)"))?;
        let n = energies.len();
        if n == 0 {
            return Err(Error::config("network.energies", "needs at least one site"));
        }
        if energies.iter().any(|e| !e.is_finite()) {
            return Err(Error::config("network.energies", "must be finite"));
        }
        let v = self.coupling.unwrap_or(1.0);
        let generated = |edges: Vec<(usize, usize)>| {
            edges
                .into_iter()
                .map(|(a, b)| Coupling { a, b, strength: v })
                .collect::<Vec<_>>()
        };
        let couplings = match self.topology {
            Topology::Ring if n >= 3 => generated(cycle_edges(n)),
            Topology::Ring | Topology::Chain => generated((1..n).map(|k| (k - 1, k)).collect()),
            Topology::Complete => generated(complete_edges(n)),
            Topology::Custom => {
                let list = self
                    .couplings
                    .as_ref()
                    .ok_or_else(|| Error::config("network.couplings", "required for a custom topology"))?;
                let mut out = Vec::with_capacity(list.len());
                for (k, c) in list.iter().enumerate() {
                    if c.a == 0 || c.b == 0 || c.a > n || c.b > n {
                        return Err(Error::config(
                            format!("network.couplings[{k}]"),
                            format!("sites must be in 1..={n}"),
                        ));
                    }
                    out.push(Coupling {
                        a: c.a - 1,
                        b: c.b - 1,
                        strength: c.strength,
                    });
                }
                out
            }
        };
        if self.topology != Topology::Custom && self.couplings.is_some() {
            return Err(Error::config("network.couplings", "only allowed with topology = \"custom\""));
        }
        let dephasing = match (&self.dephasing, self.gamma) {
            (Some(d), _) if d.len() != n => {
                return Err(Error::config("network.dephasing", format!("expected {n} rates, got {}", d.len())))
            }
            (Some(d), _) => d.clone(),
            (None, Some(g)) => vec![g; n],
            (None, None) => vec![0.0; n],
        };
        if dephasing.iter().any(|g| !(*g >= 0.0 && g.is_finite())) {
            return Err(Error::config("network.dephasing", "rates must be finite and >= 0"));
        }
        ExcitonNetwork::new(energies, couplings, dephasing).map_err(|e| Error::config("network", e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub dt: f64,
    pub horizon: f64,
    #[serde(default = "one")]
    pub trajectories: usize,
    #[serde(default = "one")]
    pub shots_per_point: usize,
    #[serde(default = "one")]
    pub trotter: usize,
}

fn one() -> usize {
    1
}

impl GridSpec {
    pub fn build(&self) -> Result<SimulationGrid> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::config("grid.dt", "must be positive"));
        }
        if !(self.horizon >= 0.0 && self.horizon.is_finite()) {
            return Err(Error::config("grid.horizon", "must be >= 0"));
        }
        if self.trajectories == 0 {
            return Err(Error::config("grid.trajectories", "must be >= 1"));
        }
        if self.shots_per_point == 0 {
            return Err(Error::config("grid.shots_per_point", "must be >= 1"));
        }
        if self.trotter == 0 {
            return Err(Error::config("grid.trotter", "must be >= 1"));
        }
        Ok(SimulationGrid::from_horizon(self.horizon, self.dt)
            .map_err(|e| Error::config("grid.horizon", e.to_string()))?
            .with_trajectories(self.trajectories)
            .with_shots(self.shots_per_point)
            .with_trotter(self.trotter))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    #[serde(default = "white")]
    pub kind: NoiseKind,
    /// Per-site variances; defaults to the network's dephasing rates.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitudes: Option<Vec<f64>>,
    #[serde(default)]
    pub lambda: f64,
}

fn white() -> NoiseKind {
    NoiseKind::White
}

impl Default for NoiseSpec {
    fn default() -> Self {
        NoiseSpec {
            kind: NoiseKind::White,
            amplitudes: None,
            lambda: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CollisionChannel {
    /// Single-ancilla circuit with measured resets.
    #[default]
    Circuit,
    /// Deterministic iteration of the exact partial-trace map.
    ExactMap,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CollisionSpec {
    #[serde(default)]
    pub channel: CollisionChannel,
    /// Explicit couplings `c_j`; derived from the dephasing rates otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub couplings: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(default = "sweep_min")]
    pub min: f64,
    #[serde(default = "sweep_max")]
    pub max: f64,
    #[serde(default = "sweep_points")]
    pub points: usize,
    /// When set, points with `γ·dt` above this value run with the smaller
    /// step `max_gamma_dt / γ` (rounded so the horizon stays a whole number
    /// of steps).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_gamma_dt: Option<f64>,
}

fn sweep_min() -> f64 {
    1e-3
}

fn sweep_max() -> f64 {
    1e2
}

fn sweep_points() -> usize {
    16
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            min: sweep_min(),
            max: sweep_max(),
            points: sweep_points(),
            max_gamma_dt: None,
        }
    }
}

impl SweepSpec {
    /// Log-spaced dephasing rates.
    pub fn values(&self) -> Result<Vec<f64>> {
        if !(self.min > 0.0 && self.min.is_finite()) {
            return Err(Error::config("sweep.min", "must be positive"));
        }
        if !(self.max > self.min && self.max.is_finite()) {
            return Err(Error::config("sweep.max", "must exceed sweep.min"));
        }
        if self.points < 2 {
            return Err(Error::config("sweep.points", "needs at least 2 points"));
        }
        if let Some(k) = self.max_gamma_dt {
            if !(k > 0.0 && k.is_finite()) {
                return Err(Error::config("sweep.max_gamma_dt", "must be positive"));
            }
        }
        let (a, b) = (self.min.log10(), self.max.log10());
        let last = (self.points - 1) as f64;
        Ok((0..self.points)
            .map(|k| match k {
                0 => self.min,
                k if k + 1 == self.points => self.max,
                k => 10f64.powf(a + (b - a) * k as f64 / last),
            })
            .collect())
    }

    /// Step used at rate `gamma` given the scenario step `dt` and horizon.
    pub fn step_for(&self, gamma: f64, dt: f64, horizon: f64) -> f64 {
        match self.max_gamma_dt {
            Some(k) if gamma * dt > k => {
                let steps = (horizon * gamma / k).ceil();
                horizon / steps
            }
            _ => dt,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectorySpec {
    #[serde(default = "trajectory_count")]
    pub count: usize,
    #[serde(default)]
    pub record_bits: bool,
}

fn trajectory_count() -> usize {
    200
}

impl Default for TrajectorySpec {
    fn default() -> Self {
        TrajectorySpec {
            count: trajectory_count(),
            record_bits: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceSpec {
    /// Number of times the base step is halved.
    #[serde(default = "halvings")]
    pub halvings: usize,
    /// Time at which the error is measured; the horizon when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub at: Option<f64>,
}

fn halvings() -> usize {
    3
}

impl Default for ConvergenceSpec {
    fn default() -> Self {
        ConvergenceSpec { halvings: halvings(), at: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalingSpec {
    #[serde(default = "scaling_sizes")]
    pub sizes: Vec<usize>,
    #[serde(default)]
    pub topology: Topology,
}

fn scaling_sizes() -> Vec<usize> {
    (4..=12).collect()
}

impl Default for ScalingSpec {
    fn default() -> Self {
        ScalingSpec {
            sizes: scaling_sizes(),
            topology: Topology::Ring,
        }
    }
}

/// Everything needed to run one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub algorithm: Algorithm,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mapping: Option<MappingKind>,
    #[serde(default)]
    pub seed: u64,
    /// Initial site, 1-based.
    pub source: usize,
    /// Observed site, 1-based.
    pub target: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub readout: Readout,
    #[serde(default)]
    pub propagator: PropagatorMode,
    pub network: NetworkSpec,
    pub grid: GridSpec,
    #[serde(default)]
    pub noise: NoiseSpec,
    #[serde(default)]
    pub collision: CollisionSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
    #[serde(default)]
    pub trajectories: TrajectorySpec,
    #[serde(default)]
    pub convergence: ConvergenceSpec,
    #[serde(default)]
    pub scaling: ScalingSpec,
    /// Directory of the file this config was read from, for relative paths.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

/// Command-line overrides applied on top of a scenario file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
    pub algorithm: Option<Algorithm>,
    pub mapping: Option<MappingKind>,
    pub dt: Option<f64>,
    pub horizon: Option<f64>,
    pub runs: Option<usize>,
    pub gamma: Option<f64>,
}

/// Fully validated scenario with 0-based sites.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub network: ExcitonNetwork,
    pub grid: SimulationGrid,
    pub mapping: MappingKind,
    pub source: usize,
    pub target: usize,
    /// Stable 64-bit digest of the scenario (seed and output excluded).
    pub hash: u64,
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let path = e
                .span()
                .map(|s| format!("byte {}..{}", s.start, s.end))
                .unwrap_or_else(|| "<document>".into());
            Error::config(path, e.message().to_string())
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::config("--config", format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf);
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::config("<serialize>", e.to_string()))
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(p) = &o.output {
            self.output = Some(p.clone());
        }
        if let Some(a) = o.algorithm {
            self.algorithm = a;
        }
        if let Some(m) = o.mapping {
            self.mapping = Some(m);
        }
        if let Some(dt) = o.dt {
            self.grid.dt = dt;
        }
        if let Some(t) = o.horizon {
            self.grid.horizon = t;
        }
        if let Some(r) = o.runs {
            self.grid.trajectories = r;
            self.trajectories.count = r;
        }
        if let Some(g) = o.gamma {
            self.network.gamma = Some(g);
            self.network.dephasing = None;
        }
    }

    /// Validates everything and converts to internal conventions.
    pub fn resolve(&self) -> Result<Scenario> {
        let network = self.network.build(self.base_dir.as_deref())?;
        let grid = self.grid.build()?;
        let n = network.n_sites();
        let site = |v: usize, field: &str| {
            if v == 0 || v > n {
                Err(Error::config(field, format!("site {v} outside 1..={n}")))
            } else {
                Ok(v - 1)
            }
        };
        let source = site(self.source, "source")?;
        let target = site(self.target, "target")?;
        let mapping = self.mapping.unwrap_or(self.algorithm.default_mapping());
        match (self.algorithm, mapping) {
            (Algorithm::Collision, MappingKind::Algorithmic) => {
                return Err(Error::config("mapping", "the collision circuit uses the physical mapping; use collision_algorithmic"))
            }
            (Algorithm::CollisionAlgorithmic, MappingKind::Physical) => {
                return Err(Error::config("mapping", "collision_algorithmic needs the algorithmic mapping"))
            }
            _ => {}
        }
        if let Some(a) = &self.noise.amplitudes {
            if a.len() != n {
                return Err(Error::config("noise.amplitudes", format!("expected {n} values, got {}", a.len())));
            }
            if a.iter().any(|w| !(*w >= 0.0 && w.is_finite())) {
                return Err(Error::config("noise.amplitudes", "variances must be finite and >= 0"));
            }
        }
        if !(self.noise.lambda >= 0.0 && self.noise.lambda.is_finite()) {
            return Err(Error::config("noise.lambda", "must be >= 0"));
        }
        if let Some(c) = &self.collision.couplings {
            if c.len() != n {
                return Err(Error::config("collision.couplings", format!("expected {n} values, got {}", c.len())));
            }
            if c.iter().any(|x| !(*x >= 0.0 && x.is_finite())) {
                return Err(Error::config("collision.couplings", "must be finite and >= 0"));
            }
        }
        if self.collision.channel == CollisionChannel::ExactMap && n > 7 {
            return Err(Error::config("collision.channel", "the exact map is limited to 7 sites"));
        }
        if let Some(s) = &self.sweep {
            s.values()?;
        }
        if self.convergence.halvings == 0 {
            return Err(Error::config("convergence.halvings", "must be >= 1"));
        }
        if let Some(t) = self.convergence.at {
            if !(t >= 0.0 && t <= self.grid.horizon) {
                return Err(Error::config("convergence.at", "must lie within the horizon"));
            }
        }
        if self.scaling.sizes.is_empty() || self.scaling.sizes.iter().any(|&n| n < 2) {
            return Err(Error::config("scaling.sizes", "needs sizes >= 2"));
        }
        if self.trajectories.count == 0 {
            return Err(Error::config("trajectories.count", "must be >= 1"));
        }
        if self.trajectories.record_bits && self.algorithm != Algorithm::Collision {
            return Err(Error::config("trajectories.record_bits", "bit strings exist only for the collision circuit"));
        }
        if self.trajectories.record_bits && self.readout != Readout::Exact {
            return Err(Error::config("trajectories.record_bits", "replayable runs need readout = \"exact\""));
        }
        Ok(Scenario {
            config: self.clone(),
            network,
            grid,
            mapping,
            source,
            target,
            hash: self.digest()?,
        })
    }

    fn digest(&self) -> Result<u64> {
        let mut c = self.clone();
        c.seed = 0;
        c.output = None;
        let text = c.to_toml()?;
        let d = Sha256::digest(text.as_bytes());
        Ok(u64::from_le_bytes(d[..8].try_into().expect("8 bytes")))
    }
}

impl Scenario {
    /// Copy whose noise amplitudes and collision couplings follow the
    /// network's dephasing rates, as needed when the rates are swept.
    pub fn for_sweep(&self) -> Scenario {
        let mut s = self.clone();
        s.config.noise.amplitudes = None;
        s.config.collision.couplings = None;
        s
    }

    /// Noise statistics for `network`; variances default to its dephasing
    /// rates (`ω² = γ`).
    pub fn noise_config(&self, network: &ExcitonNetwork) -> Result<NoiseConfig> {
        let amplitudes = self
            .config
            .noise
            .amplitudes
            .clone()
            .unwrap_or_else(|| network.dephasing().to_vec());
        match self.config.noise.kind {
            NoiseKind::White => NoiseConfig::white(amplitudes),
            NoiseKind::OrnsteinUhlenbeck => NoiseConfig::ornstein_uhlenbeck(amplitudes, self.config.noise.lambda),
        }
    }

    pub fn collision_config(&self, network: &ExcitonNetwork, grid: &SimulationGrid) -> Result<CollisionConfig> {
        match &self.config.collision.couplings {
            Some(c) => CollisionConfig::new(c.clone(), grid.dt, grid.trotter, self.mapping),
            None => CollisionConfig::from_rates(network, grid.dt, grid.trotter, self.mapping),
        }
    }
}
