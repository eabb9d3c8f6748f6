//! Collision-model unravelling of site dephasing.
//!
//! The system repeatedly interacts with fresh ancilla qubits through
//! `c_j σ_z^j ⊗ σ_x^a` for a time `δτ` and the ancilla is discarded. Two
//! realizations are provided: the exact partial-trace channel with one
//! ancilla per site, and the Trotterized circuit that reuses a single
//! ancilla (always the last qubit) and resets it after every interaction.
//! The algorithmic-mapping variant with a `|j⟩⟨j| ⊗ σ_z` coupling lives at
//! the end of the module.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::SimulationGrid;
use crate::network::{
    encode_physical, pauli_sum_matrix, qubit_hamiltonian, site_hamiltonian, ExcitonNetwork, MappingKind, Pauli,
    PauliTerm,
};
use crate::noise::{matvec, trajectory_streams, Readout, TrajectoryRecord};
use crate::quantum::gates;
use crate::quantum::matrix::{hermitian_eigen, hermitian_expm, ComplexMatrix, C64};
use crate::quantum::state::{conjugate_by, excited_probability, measure_reset_amplitudes};
use crate::stats::{accumulate, EnsembleSeries};

/// Largest register (system plus ancillas) stored densely.
pub const MAX_DENSE_QUBITS: usize = 14;

/// Collision couplings and discretization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollisionConfig {
    /// `c_j`, one per site.
    pub couplings: Vec<f64>,
    pub dt: f64,
    /// Trotter substeps per block.
    pub trotter: usize,
    pub mapping: MappingKind,
}

impl CollisionConfig {
    pub fn new(couplings: Vec<f64>, dt: f64, trotter: usize, mapping: MappingKind) -> Result<Self> {
        let c = CollisionConfig {
            couplings,
            dt,
            trotter,
            mapping,
        };
        c.validate()?;
        Ok(c)
    }

    /// Couplings that reproduce the network's dephasing rates.
    ///
    /// Physical mapping: `c_j = √(Γ_j/δτ)` with `Γ_j = γ_j/4`. Algorithmic
    /// mapping: the random-sign phase kick damps coherences by `cos(c δτ)`
    /// per step, which requires `c_j = √(γ_j/δτ)`.
    pub fn from_rates(network: &ExcitonNetwork, dt: f64, trotter: usize, mapping: MappingKind) -> Result<Self> {
        let scale = match mapping {
            MappingKind::Physical => 0.25,
            MappingKind::Algorithmic => 1.0,
        };
        let couplings = network.dephasing().iter().map(|g| (scale * g / dt).sqrt()).collect();
        Self::new(couplings, dt, trotter, mapping)
    }

    /// Dephasing rates `γ_j` implied by the couplings.
    pub fn implied_rates(&self) -> Vec<f64> {
        let scale = match self.mapping {
            MappingKind::Physical => 4.0,
            MappingKind::Algorithmic => 1.0,
        };
        self.couplings.iter().map(|c| scale * c * c * self.dt).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Precondition(format!("collision time {} must be positive", self.dt)));
        }
        if self.trotter == 0 {
            return Err(Error::Precondition("Trotter substeps must be >= 1".into()));
        }
        if let Some(c) = self.couplings.iter().find(|c| !(**c >= 0.0 && c.is_finite())) {
            return Err(Error::Precondition(format!("coupling {c} must be >= 0")));
        }
        Ok(())
    }

    fn check_network(&self, network: &ExcitonNetwork) -> Result<()> {
        if self.couplings.len() != network.n_sites() {
            return Err(Error::Dimension {
                expected: network.n_sites(),
                found: self.couplings.len(),
            });
        }
        Ok(())
    }

    fn check_grid(&self, grid: &SimulationGrid) -> Result<()> {
        grid.validate()?;
        if (grid.dt - self.dt).abs() > 1e-12 * self.dt || grid.trotter != self.trotter {
            return Err(Error::Precondition(format!(
                "grid (dt {}, m {}) disagrees with collision config (dt {}, m {})",
                grid.dt, grid.trotter, self.dt, self.trotter
            )));
        }
        Ok(())
    }

    fn require_physical(&self) -> Result<()> {
        if self.mapping != MappingKind::Physical {
            return Err(Error::Precondition("operation needs the physical mapping".into()));
        }
        Ok(())
    }
}

/// `H_ex ⊗ I + Σ_j c_j σ_z^j ⊗ σ_x^{a_j}` on `N + n_ancillas` qubits.
///
/// With one ancilla every site couples to the same qubit; with `N` ancillas
/// site `j` couples to qubit `N + j`.
pub fn collision_hamiltonian(network: &ExcitonNetwork, config: &CollisionConfig, n_ancillas: usize) -> Result<ComplexMatrix> {
    config.require_physical()?;
    config.check_network(network)?;
    let n = network.n_sites();
    if n_ancillas != 1 && n_ancillas != n {
        return Err(Error::Precondition(format!("{n_ancillas} ancillas: use 1 or {n}")));
    }
    if n + n_ancillas > MAX_DENSE_QUBITS {
        return Err(Error::Precondition(format!(
            "{} qubits exceed the dense limit of {MAX_DENSE_QUBITS}",
            n + n_ancillas
        )));
    }
    let mut terms = qubit_hamiltonian(network);
    for (j, &c) in config.couplings.iter().enumerate() {
        let anc = if n_ancillas == 1 { n } else { n + j };
        terms.push(PauliTerm::new(c, vec![(j, Pauli::Z), (anc, Pauli::X)])?);
    }
    pauli_sum_matrix(&terms, n + n_ancillas)
}

/// Kraus form of one collision with `N` fresh ancillas.
#[derive(Debug, Clone)]
pub struct CollisionMap {
    kraus: Vec<ComplexMatrix>,
    single_exciton: bool,
}

impl CollisionMap {
    /// Builds `K_b = ⟨b|_a exp(-iH_CM δτ) |0⟩_a`. With `single_exciton` the
    /// operators are restricted to the `N` single-excitation system states
    /// (they conserve the system excitation number), otherwise they act on
    /// the full `2^N` register.
    pub fn new(network: &ExcitonNetwork, config: &CollisionConfig, single_exciton: bool) -> Result<Self> {
        let n = network.n_sites();
        let h = collision_hamiltonian(network, config, n)?;
        let u = hermitian_expm(&h, config.dt)?;
        let anc_dim = 1usize << n;
        let sys: Vec<usize> = if single_exciton {
            (0..n).map(|j| encode_physical(j, n)).collect::<Result<_>>()?
        } else {
            (0..1usize << n).collect()
        };
        let kraus = (0..anc_dim)
            .map(|b| ComplexMatrix::from_fn(sys.len(), sys.len(), |r, c| u[(sys[r] * anc_dim + b, sys[c] * anc_dim)]))
            .collect();
        Ok(CollisionMap {
            kraus,
            single_exciton,
        })
    }

    pub fn dim(&self) -> usize {
        self.kraus[0].nrows()
    }

    pub fn kraus(&self) -> &[ComplexMatrix] {
        &self.kraus
    }

    pub fn apply(&self, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
        if rho.nrows() != self.dim() || rho.ncols() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                found: rho.nrows(),
            });
        }
        let mut out = ComplexMatrix::zeros(self.dim(), self.dim());
        for k in &self.kraus {
            out += k * rho * k.adjoint();
        }
        Ok(out)
    }

    /// Site populations after `s = 0..=steps` collisions, starting on `source`.
    pub fn iterate(&self, n_sites: usize, source: usize, steps: usize) -> Result<Vec<Vec<f64>>> {
        let index = |j: usize| if self.single_exciton { Ok(j) } else { encode_physical(j, n_sites) };
        let mut rho = ComplexMatrix::zeros(self.dim(), self.dim());
        let start = index(source)?;
        rho[(start, start)] = C64::new(1.0, 0.0);
        let sites: Vec<usize> = (0..n_sites).map(index).collect::<Result<_>>()?;
        let mut out = Vec::with_capacity(steps + 1);
        for s in 0..=steps {
            if s > 0 {
                rho = self.apply(&rho)?;
            }
            out.push(sites.iter().map(|&k| rho[(k, k)].re).collect());
        }
        Ok(out)
    }
}

/// One collision applied to a system density matrix on the `2^N` register.
pub fn exact_collision_map(rho: &ComplexMatrix, network: &ExcitonNetwork, config: &CollisionConfig) -> Result<ComplexMatrix> {
    CollisionMap::new(network, config, false)?.apply(rho)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GateKind {
    X,
    Z,
    Identity,
    RZ,
    RXX,
    RYY,
    RZX,
    /// `diag(1, e^{iθ})`.
    DiagonalPhase,
    Reset,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateOp {
    pub kind: GateKind,
    pub angle: f64,
    pub targets: Vec<usize>,
}

impl GateOp {
    pub fn new(kind: GateKind, angle: f64, targets: Vec<usize>) -> Result<Self> {
        let arity = match kind {
            GateKind::RXX | GateKind::RYY | GateKind::RZX => 2,
            _ => 1,
        };
        if targets.len() != arity {
            return Err(Error::Precondition(format!("{kind:?} takes {arity} targets, got {}", targets.len())));
        }
        Ok(GateOp { kind, angle, targets })
    }

    fn one(kind: GateKind, angle: f64, q: usize) -> Self {
        GateOp {
            kind,
            angle,
            targets: vec![q],
        }
    }

    fn two(kind: GateKind, angle: f64, a: usize, b: usize) -> Self {
        GateOp {
            kind,
            angle,
            targets: vec![a, b],
        }
    }

    /// Unitary matrix of the gate; `None` for `Reset`.
    pub fn matrix(&self) -> Option<ComplexMatrix> {
        Some(match self.kind {
            GateKind::X => gates::pauli_x(),
            GateKind::Z => gates::pauli_z(),
            GateKind::Identity => gates::identity(1),
            GateKind::RZ => gates::rz(self.angle),
            GateKind::RXX => gates::rxx(self.angle),
            GateKind::RYY => gates::ryy(self.angle),
            GateKind::RZX => gates::rzx(self.angle),
            GateKind::DiagonalPhase => {
                let mut m = gates::identity(1);
                m[(1, 1)] = C64::from_polar(1.0, self.angle);
                m
            }
            GateKind::Reset => return None,
        })
    }
}

/// One evolution block of the single-ancilla circuit (ancilla = qubit `N`).
pub fn trotter_gate_sequence(network: &ExcitonNetwork, config: &CollisionConfig) -> Result<Vec<GateOp>> {
    config.require_physical()?;
    config.check_network(network)?;
    config.validate()?;
    let n = network.n_sites();
    let m = config.trotter;
    let h = config.dt / m as f64;
    let mut ops = Vec::with_capacity(m * (3 * n + 2 * network.couplings().len()));
    for _ in 0..m {
        for (j, &e) in network.energies().iter().enumerate() {
            ops.push(GateOp::one(GateKind::RZ, -e * h, j));
        }
        for c in network.couplings() {
            ops.push(GateOp::two(GateKind::RXX, c.strength * h, c.a, c.b));
            ops.push(GateOp::two(GateKind::RYY, c.strength * h, c.a, c.b));
        }
        for (j, &c) in config.couplings.iter().enumerate() {
            ops.push(GateOp::two(GateKind::RZX, 2.0 * c * h, j, n));
            ops.push(GateOp::one(GateKind::Reset, 0.0, n));
        }
    }
    Ok(ops)
}

/// The block with every (RZX, Reset) pair replaced by the recorded branch:
/// `(Identity, Identity)` for bit 0, `(Z on the system qubit, Identity)` for
/// bit 1. `bits` holds the `N·m` outcomes of this block.
pub fn replay_gate_sequence(network: &ExcitonNetwork, config: &CollisionConfig, bits: &[bool]) -> Result<Vec<GateOp>> {
    let mut ops = trotter_gate_sequence(network, config)?;
    let n = network.n_sites();
    let expected = n * config.trotter;
    if bits.len() != expected {
        return Err(Error::Dimension {
            expected,
            found: bits.len(),
        });
    }
    let mut k = 0;
    for op in ops.iter_mut() {
        match op.kind {
            GateKind::RZX => {
                let sys = op.targets[0];
                *op = if bits[k] { GateOp::one(GateKind::Z, 0.0, sys) } else { GateOp::one(GateKind::Identity, 0.0, sys) };
                k += 1;
            }
            GateKind::Reset => *op = GateOp::one(GateKind::Identity, 0.0, n),
            _ => {}
        }
    }
    Ok(ops)
}

/// Reset outcomes of one run, ordered by step, then Trotter substep, then
/// site ascending.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CollisionBitString {
    pub n_sites: usize,
    pub steps: usize,
    pub trotter: usize,
    pub bits: Vec<bool>,
}

impl CollisionBitString {
    pub fn new(n_sites: usize, steps: usize, trotter: usize, bits: Vec<bool>) -> Result<Self> {
        let expected = n_sites * steps * trotter;
        if bits.len() != expected {
            return Err(Error::Dimension {
                expected,
                found: bits.len(),
            });
        }
        Ok(CollisionBitString {
            n_sites,
            steps,
            trotter,
            bits,
        })
    }

    pub fn zeros(n_sites: usize, steps: usize, trotter: usize) -> Self {
        CollisionBitString {
            n_sites,
            steps,
            trotter,
            bits: vec![false; n_sites * steps * trotter],
        }
    }

    pub fn index(&self, step: usize, substep: usize, site: usize) -> usize {
        (step * self.trotter + substep) * self.n_sites + site
    }

    pub fn get(&self, step: usize, substep: usize, site: usize) -> bool {
        self.bits[self.index(step, substep, site)]
    }

    pub fn set(&mut self, step: usize, substep: usize, site: usize, value: bool) {
        let k = self.index(step, substep, site);
        self.bits[k] = value;
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Block index of the first 1-bit, if any.
    pub fn first_event_step(&self) -> Option<usize> {
        let per_step = self.n_sites * self.trotter;
        self.bits.iter().position(|&b| b).map(|k| k / per_step)
    }

    /// Bits packed four per hex digit, most significant first, zero padded.
    pub fn to_hex(&self) -> String {
        self.bits
            .chunks(4)
            .map(|nib| {
                let v = nib.iter().enumerate().fold(0u32, |acc, (i, &b)| acc | (u32::from(b) << (3 - i)));
                char::from_digit(v, 16).expect("nibble < 16")
            })
            .collect()
    }

    pub fn from_hex(hex: &str, n_sites: usize, steps: usize, trotter: usize) -> Result<Self> {
        let len = n_sites * steps * trotter;
        if hex.len() != len.div_ceil(4) {
            return Err(Error::Dimension {
                expected: len.div_ceil(4),
                found: hex.len(),
            });
        }
        let mut bits = Vec::with_capacity(hex.len() * 4);
        for ch in hex.chars() {
            let v = ch
                .to_digit(16)
                .ok_or_else(|| Error::Precondition(format!("invalid hex digit {ch:?}")))?;
            bits.extend((0..4).map(|i| v & (1 << (3 - i)) != 0));
        }
        if bits[len..].iter().any(|&b| b) {
            return Err(Error::Precondition("non-zero padding bits".into()));
        }
        bits.truncate(len);
        Self::new(n_sites, steps, trotter, bits)
    }
}

/// Gate lowered to an in-place amplitude kernel.
#[derive(Debug, Clone, Copy)]
enum Kernel {
    Phase { mask: usize, zero: C64, one: C64 },
    Flip { mask: usize },
    /// `cos(θ/2) I - i sin(θ/2) P` for a two-qubit Pauli product `P`.
    PairRotation { pauli: PairPauli, high: usize, low: usize, cos: f64, sin: f64 },
    Collision { system: usize, ancilla: usize, cos: f64, sin: f64 },
    Reset { mask: usize },
    Nop,
}

#[derive(Debug, Clone, Copy)]
enum PairPauli {
    XX,
    YY,
}

/// Compiled single-ancilla circuit for one network.
#[derive(Debug, Clone)]
pub struct CollisionCircuit {
    n_sites: usize,
    config: CollisionConfig,
    ops: Vec<GateOp>,
    kernels: Vec<Kernel>,
}

/// Output of one circuit run.
#[derive(Debug, Clone, PartialEq)]
pub struct CollisionRun {
    pub record: TrajectoryRecord,
    pub bits: Option<CollisionBitString>,
}

impl CollisionCircuit {
    pub fn new(network: &ExcitonNetwork, config: &CollisionConfig) -> Result<Self> {
        let ops = trotter_gate_sequence(network, config)?;
        let n_qubits = network.n_sites() + 1;
        if n_qubits > MAX_DENSE_QUBITS + 10 {
            return Err(Error::Precondition(format!("{n_qubits} qubits is too many")));
        }
        let mask = |q: usize| 1usize << (n_qubits - 1 - q);
        let kernels = ops
            .iter()
            .map(|op| {
                let (s, c) = (op.angle / 2.0).sin_cos();
                match op.kind {
                    GateKind::RZ => Kernel::Phase {
                        mask: mask(op.targets[0]),
                        zero: C64::new(c, -s),
                        one: C64::new(c, s),
                    },
                    GateKind::RXX | GateKind::RYY => Kernel::PairRotation {
                        pauli: if op.kind == GateKind::RXX { PairPauli::XX } else { PairPauli::YY },
                        high: mask(op.targets[0]),
                        low: mask(op.targets[1]),
                        cos: c,
                        sin: s,
                    },
                    GateKind::RZX => Kernel::Collision {
                        system: mask(op.targets[0]),
                        ancilla: mask(op.targets[1]),
                        cos: c,
                        sin: s,
                    },
                    GateKind::Reset => Kernel::Reset { mask: mask(op.targets[0]) },
                    GateKind::Z => Kernel::Phase {
                        mask: mask(op.targets[0]),
                        zero: C64::new(1.0, 0.0),
                        one: C64::new(-1.0, 0.0),
                    },
                    GateKind::X => Kernel::Flip { mask: mask(op.targets[0]) },
                    GateKind::DiagonalPhase => Kernel::Phase {
                        mask: mask(op.targets[0]),
                        zero: C64::new(1.0, 0.0),
                        one: C64::from_polar(1.0, op.angle),
                    },
                    GateKind::Identity => Kernel::Nop,
                }
            })
            .collect();
        Ok(CollisionCircuit {
            n_sites: network.n_sites(),
            config: config.clone(),
            ops,
            kernels,
        })
    }

    pub fn gate_sequence(&self) -> &[GateOp] {
        &self.ops
    }

    pub fn n_qubits(&self) -> usize {
        self.n_sites + 1
    }

    fn initial_state(&self, source: usize) -> Result<Vec<C64>> {
        let n = self.n_qubits();
        let mut amps = vec![C64::new(0.0, 0.0); 1 << n];
        amps[0] = C64::new(1.0, 0.0);
        if source >= self.n_sites {
            return Err(Error::Precondition(format!("site {source} outside {} sites", self.n_sites)));
        }
        apply_kernel(&mut amps, Kernel::Flip { mask: 1 << (n - 1 - source) });
        Ok(amps)
    }

    fn site_masks(&self) -> Vec<usize> {
        (0..self.n_sites).map(|j| 1 << (self.n_qubits() - 1 - j)).collect()
    }

    /// Runs `grid.steps` blocks. Reset outcomes come from `collision_rng`,
    /// single-shot readouts from `readout_rng`. Readout happens after each
    /// full block.
    #[allow(clippy::too_many_arguments)]
    pub fn run<R: Rng + ?Sized>(
        &self,
        grid: &SimulationGrid,
        source: usize,
        target: usize,
        collision_rng: &mut R,
        readout_rng: &mut R,
        readout: Readout,
        record_bits: bool,
        keep_populations: bool,
    ) -> Result<CollisionRun> {
        self.config.check_grid(grid)?;
        if target >= self.n_sites {
            return Err(Error::Precondition(format!("site {target} outside {} sites", self.n_sites)));
        }
        let mut amps = self.initial_state(source)?;
        let masks = self.site_masks();
        let mut bits = record_bits.then(|| Vec::with_capacity(self.n_sites * grid.steps * grid.trotter));
        let mut estimator = Vec::with_capacity(grid.n_samples());
        let mut populations = keep_populations.then(|| Vec::with_capacity(grid.n_samples()));
        for s in 0..=grid.steps {
            if s > 0 {
                for &k in &self.kernels {
                    if let Kernel::Reset { mask } = k {
                        let b = measure_reset_amplitudes(&mut amps, mask, collision_rng)?;
                        if let Some(bits) = bits.as_mut() {
                            bits.push(b == 1);
                        }
                    } else {
                        apply_kernel(&mut amps, k);
                    }
                }
            }
            let p = excited_probability(&amps, masks[target]).min(1.0);
            estimator.push(match readout {
                Readout::Exact => p,
                Readout::SingleShot => f64::from(u8::from(readout_rng.random::<f64>() < p)),
            });
            if let Some(pops) = populations.as_mut() {
                pops.push(masks.iter().map(|&m| excited_probability(&amps, m)).collect());
            }
        }
        let norm_drift = (amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt() - 1.0).abs();
        let bits = bits
            .map(|b| CollisionBitString::new(self.n_sites, grid.steps, grid.trotter, b))
            .transpose()?;
        Ok(CollisionRun {
            record: TrajectoryRecord {
                id: 0,
                estimator,
                populations,
                stream: 0,
                noise: None,
                norm_drift,
            },
            bits,
        })
    }

    /// Run `id` with streams derived from `(seed, path, id)`.
    #[allow(clippy::too_many_arguments)]
    pub fn run_seeded(
        &self,
        grid: &SimulationGrid,
        source: usize,
        target: usize,
        seed: u64,
        path: &[u64],
        id: u64,
        readout: Readout,
        record_bits: bool,
    ) -> Result<CollisionRun> {
        let (mut collision_rng, mut readout_rng, key) = trajectory_streams(seed, path, id);
        let mut run = self.run(grid, source, target, &mut collision_rng, &mut readout_rng, readout, record_bits, false)?;
        run.record.id = id;
        run.record.stream = key;
        Ok(run)
    }

    #[allow(clippy::too_many_arguments)]
    pub fn ensemble(
        &self,
        grid: &SimulationGrid,
        source: usize,
        target: usize,
        seed: u64,
        path: &[u64],
        count: usize,
        readout: Readout,
    ) -> Result<EnsembleSeries> {
        accumulate(count, grid.n_samples(), grid.dt, |k| {
            Ok(self.run_seeded(grid, source, target, seed, path, k as u64, readout, false)?.record.estimator)
        })
    }

    /// Deterministic rerun following recorded outcomes: each (RZX, Reset)
    /// pair becomes Identity (bit 0) or Z on the system qubit (bit 1).
    /// Returns the exact site populations at every sample.
    pub fn replay(&self, grid: &SimulationGrid, source: usize, bits: &CollisionBitString) -> Result<Vec<Vec<f64>>> {
        self.config.check_grid(grid)?;
        if bits.n_sites != self.n_sites || bits.steps != grid.steps || bits.trotter != grid.trotter {
            return Err(Error::Dimension {
                expected: self.n_sites * grid.steps * grid.trotter,
                found: bits.bits.len(),
            });
        }
        let mut amps = self.initial_state(source)?;
        let masks = self.site_masks();
        let mut next = bits.bits.iter();
        let mut out = Vec::with_capacity(grid.n_samples());
        for s in 0..=grid.steps {
            if s > 0 {
                for &k in &self.kernels {
                    match k {
                        Kernel::Collision { system, .. } => {
                            if *next.next().expect("length checked") {
                                apply_kernel(
                                    &mut amps,
                                    Kernel::Phase {
                                        mask: system,
                                        zero: C64::new(1.0, 0.0),
                                        one: C64::new(-1.0, 0.0),
                                    },
                                );
                            }
                        }
                        Kernel::Reset { .. } => {}
                        _ => apply_kernel(&mut amps, k),
                    }
                }
            }
            out.push(masks.iter().map(|&m| excited_probability(&amps, m)).collect());
        }
        Ok(out)
    }

    /// One block averaged over reset outcomes, on the `N+1`-qubit density
    /// matrix (ancilla in `|0⟩`).
    pub fn density_block(&self, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
        let n = self.n_qubits();
        if rho.nrows() != 1 << n {
            return Err(Error::Dimension {
                expected: 1 << n,
                found: rho.nrows(),
            });
        }
        let mut out = rho.clone();
        for op in &self.ops {
            out = match op.matrix() {
                Some(u) => conjugate_by(&out, n, &u, &op.targets),
                None => reset_density(&out, n, op.targets[0]),
            };
        }
        Ok(out)
    }
}

fn apply_kernel(amps: &mut [C64], k: Kernel) {
    let minus_i = C64::new(0.0, -1.0);
    match k {
        Kernel::Nop | Kernel::Reset { .. } => {}
        Kernel::Phase { mask, zero, one } => {
            for (idx, a) in amps.iter_mut().enumerate() {
                *a *= if idx & mask != 0 { one } else { zero };
            }
        }
        Kernel::Flip { mask } => {
            for idx in 0..amps.len() {
                if idx & mask == 0 {
                    amps.swap(idx, idx | mask);
                }
            }
        }
        Kernel::PairRotation { pauli, high, low, cos, sin } => {
            let both = high | low;
            for idx in 0..amps.len() {
                if idx & high != 0 {
                    continue;
                }
                let partner = idx ^ both;
                // YY maps |00⟩ ↔ -|11⟩ and |01⟩ ↔ |10⟩.
                let sign = match pauli {
                    PairPauli::XX => 1.0,
                    PairPauli::YY if idx & low == 0 => -1.0,
                    PairPauli::YY => 1.0,
                };
                let (a, b) = (amps[idx], amps[partner]);
                let k = minus_i * (sin * sign);
                amps[idx] = a * cos + k * b;
                amps[partner] = b * cos + k * a;
            }
        }
        Kernel::Collision { system, ancilla, cos, sin } => {
            for idx in 0..amps.len() {
                if idx & ancilla != 0 {
                    continue;
                }
                let partner = idx | ancilla;
                let sign = if idx & system != 0 { -1.0 } else { 1.0 };
                let (a, b) = (amps[idx], amps[partner]);
                let k = minus_i * (sin * sign);
                amps[idx] = a * cos + k * b;
                amps[partner] = b * cos + k * a;
            }
        }
    }
}

/// Resets `qubit` to `|0⟩` in a density matrix (trace out, then re-prepare).
pub fn reset_density(rho: &ComplexMatrix, n: usize, qubit: usize) -> ComplexMatrix {
    let mask = 1usize << (n - 1 - qubit);
    let dim = rho.nrows();
    ComplexMatrix::from_fn(dim, dim, |r, c| {
        if r & mask != 0 || c & mask != 0 {
            C64::new(0.0, 0.0)
        } else {
            rho[(r, c)] + rho[(r | mask, c | mask)]
        }
    })
}

/// Convenience wrapper around [`CollisionCircuit::run`].
#[allow(clippy::too_many_arguments)]
pub fn run_collision_circuit<R: Rng + ?Sized>(
    network: &ExcitonNetwork,
    config: &CollisionConfig,
    grid: &SimulationGrid,
    source: usize,
    target: usize,
    collision_rng: &mut R,
    readout_rng: &mut R,
    readout: Readout,
    record_bits: bool,
) -> Result<CollisionRun> {
    CollisionCircuit::new(network, config)?.run(grid, source, target, collision_rng, readout_rng, readout, record_bits, false)
}

/// Convenience wrapper around [`CollisionCircuit::replay`].
pub fn replay_from_bits(
    network: &ExcitonNetwork,
    config: &CollisionConfig,
    grid: &SimulationGrid,
    source: usize,
    bits: &CollisionBitString,
) -> Result<Vec<Vec<f64>>> {
    CollisionCircuit::new(network, config)?.replay(grid, source, bits)
}

/// Collision dynamics under the algorithmic mapping.
///
/// Each block applies `exp(-iHδτ)` to the binary-encoded system, then for
/// each site `j` draws the ancilla uniformly from `{|0⟩, |1⟩}` and applies
/// `exp(-i c_j δτ |j⟩⟨j| ⊗ σ_z)`. The ancilla starts in a basis state and the
/// interaction is diagonal, so it never becomes entangled with the system;
/// only its drawn value (the sign of the phase kick) is tracked.
#[derive(Debug, Clone)]
pub struct AlgorithmicCollision {
    n_sites: usize,
    step: ComplexMatrix,
    /// `c_j δτ / m`.
    kicks: Vec<f64>,
    trotter: usize,
    config: CollisionConfig,
}

impl AlgorithmicCollision {
    pub fn new(network: &ExcitonNetwork, config: &CollisionConfig) -> Result<Self> {
        if config.mapping != MappingKind::Algorithmic {
            return Err(Error::Precondition("operation needs the algorithmic mapping".into()));
        }
        config.validate()?;
        config.check_network(network)?;
        let n = network.n_sites();
        let dim = 1 << MappingKind::Algorithmic.n_qubits(n);
        let mut h = ComplexMatrix::zeros(dim, dim);
        h.view_mut((0, 0), (n, n)).copy_from(&site_hamiltonian(network));
        let h_sub = config.dt / config.trotter as f64;
        Ok(AlgorithmicCollision {
            n_sites: n,
            step: hermitian_expm(&h, h_sub)?,
            kicks: config.couplings.iter().map(|c| c * h_sub).collect(),
            trotter: config.trotter,
            config: config.clone(),
        })
    }

    pub fn dim(&self) -> usize {
        self.step.nrows()
    }

    /// One block on the system register (`2^⌈log2 N⌉` amplitudes).
    pub fn step<R: Rng + ?Sized>(&self, psi: &mut Vec<C64>, rng: &mut R) -> Result<()> {
        if psi.len() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                found: psi.len(),
            });
        }
        for _ in 0..self.trotter {
            *psi = matvec(&self.step, psi);
            for (j, &kick) in self.kicks.iter().enumerate() {
                let ancilla_one = rng.random::<bool>();
                let phase = if ancilla_one { kick } else { -kick };
                psi[j] *= C64::from_polar(1.0, phase);
            }
        }
        Ok(())
    }

    /// Site populations averaged over the ancilla draws, computed on the
    /// `N x N` density matrix: each kick pair multiplies `ρ_jk` by
    /// `cos(a_j) cos(a_k)` for `j ≠ k`.
    pub fn mean_populations(&self, grid: &SimulationGrid, source: usize) -> Result<Vec<Vec<f64>>> {
        self.config.check_grid(grid)?;
        let n = self.n_sites;
        if source >= n {
            return Err(Error::Precondition(format!("site {source} outside {n} sites")));
        }
        let u = self.step.view((0, 0), (n, n)).into_owned();
        let u_adj = u.adjoint();
        let damp: Vec<f64> = self.kicks.iter().map(|a| a.cos()).collect();
        let mut rho = ComplexMatrix::zeros(n, n);
        rho[(source, source)] = C64::new(1.0, 0.0);
        let mut out = Vec::with_capacity(grid.n_samples());
        for s in 0..=grid.steps {
            if s > 0 {
                for _ in 0..self.trotter {
                    rho = &u * &rho * &u_adj;
                    for j in 0..n {
                        for k in 0..n {
                            if j != k {
                                rho[(j, k)] *= damp[j] * damp[k];
                            }
                        }
                    }
                }
            }
            out.push((0..n).map(|j| rho[(j, j)].re).collect());
        }
        Ok(out)
    }

    #[allow(clippy::too_many_arguments)]
    pub fn run<R: Rng + ?Sized>(
        &self,
        grid: &SimulationGrid,
        source: usize,
        target: usize,
        collision_rng: &mut R,
        readout_rng: &mut R,
        readout: Readout,
    ) -> Result<TrajectoryRecord> {
        self.config.check_grid(grid)?;
        if source >= self.n_sites || target >= self.n_sites {
            return Err(Error::Precondition("site outside the network".into()));
        }
        let mut psi = vec![C64::new(0.0, 0.0); self.dim()];
        psi[source] = C64::new(1.0, 0.0);
        let mut estimator = Vec::with_capacity(grid.n_samples());
        for s in 0..=grid.steps {
            if s > 0 {
                self.step(&mut psi, collision_rng)?;
            }
            let p = psi[target].norm_sqr().min(1.0);
            estimator.push(match readout {
                Readout::Exact => p,
                Readout::SingleShot => f64::from(u8::from(readout_rng.random::<f64>() < p)),
            });
        }
        let norm_drift = (psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt() - 1.0).abs();
        Ok(TrajectoryRecord {
            id: 0,
            estimator,
            populations: None,
            stream: 0,
            noise: None,
            norm_drift,
        })
    }

    #[allow(clippy::too_many_arguments)]
    pub fn run_seeded(
        &self,
        grid: &SimulationGrid,
        source: usize,
        target: usize,
        seed: u64,
        path: &[u64],
        id: u64,
        readout: Readout,
    ) -> Result<TrajectoryRecord> {
        let (mut collision_rng, mut readout_rng, key) = trajectory_streams(seed, path, id);
        let mut rec = self.run(grid, source, target, &mut collision_rng, &mut readout_rng, readout)?;
        rec.id = id;
        rec.stream = key;
        Ok(rec)
    }

    #[allow(clippy::too_many_arguments)]
    pub fn ensemble(
        &self,
        grid: &SimulationGrid,
        source: usize,
        target: usize,
        seed: u64,
        path: &[u64],
        count: usize,
        readout: Readout,
    ) -> Result<EnsembleSeries> {
        accumulate(count, grid.n_samples(), grid.dt, |k| {
            Ok(self.run_seeded(grid, source, target, seed, path, k as u64, readout)?.estimator)
        })
    }
}

/// Result of reconstructing the one-qubit channel of an (RZX, Reset) pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TomographyReport {
    /// Phase-flip probability read off the transfer matrix.
    pub p_z: f64,
    /// `sin²(c δτ)`.
    pub expected_p: f64,
    /// Pauli transfer matrix in the order `I, X, Y, Z`.
    pub transfer: [[f64; 4]; 4],
    /// Largest deviation from `(1-p)ρ + pZρZ` over the probe states.
    pub max_deviation: f64,
}

/// Tomography of one collision on a single system qubit with `H = 0`.
pub fn channel_tomography_1q(coupling: f64, dt: f64) -> Result<TomographyReport> {
    let network = ExcitonNetwork::new(vec![0.0], vec![], vec![0.0])?;
    let config = CollisionConfig::new(vec![coupling], dt, 1, MappingKind::Physical)?;
    let circuit = CollisionCircuit::new(&network, &config)?;
    let half = std::f64::consts::FRAC_1_SQRT_2;
    let probes: [[C64; 2]; 4] = [
        [C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
        [C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
        [C64::new(half, 0.0), C64::new(half, 0.0)],
        [C64::new(half, 0.0), C64::new(0.0, half)],
    ];
    let p = (coupling * dt).sin().powi(2);
    let z = gates::pauli_z();
    let mut outputs = Vec::with_capacity(4);
    let mut max_deviation: f64 = 0.0;
    for psi in &probes {
        let rho_s = ComplexMatrix::from_fn(2, 2, |r, c| psi[r] * psi[c].conj());
        let mut rho = ComplexMatrix::zeros(4, 4);
        for r in 0..2 {
            for c in 0..2 {
                rho[(2 * r, 2 * c)] = rho_s[(r, c)];
            }
        }
        let out = circuit.density_block(&rho)?;
        let out_s = crate::quantum::state::partial_trace_qubit(&out, 2, 1);
        let expected = &rho_s * C64::new(1.0 - p, 0.0) + &z * &rho_s * &z * C64::new(p, 0.0);
        max_deviation = max_deviation.max(crate::quantum::matrix::max_abs_diff(&out_s, &expected));
        outputs.push(out_s);
    }
    let e_i = &outputs[0] + &outputs[1];
    let e_z = &outputs[0] - &outputs[1];
    let e_x = &outputs[2] * C64::new(2.0, 0.0) - &e_i;
    let e_y = &outputs[3] * C64::new(2.0, 0.0) - &e_i;
    let paulis = [gates::identity(1), gates::pauli_x(), gates::pauli_y(), gates::pauli_z()];
    let images = [e_i, e_x, e_y, e_z];
    let mut transfer = [[0.0; 4]; 4];
    for (a, pa) in paulis.iter().enumerate() {
        for (b, img) in images.iter().enumerate() {
            transfer[a][b] = 0.5 * (pa * img).trace().re;
        }
    }
    let p_z = (1.0 - transfer[1][1]) / 2.0;
    let ideal = [1.0, 1.0 - 2.0 * p, 1.0 - 2.0 * p, 1.0];
    for (a, row) in transfer.iter().enumerate() {
        for (b, value) in row.iter().enumerate() {
            let target = if a == b { ideal[a] } else { 0.0 };
            max_deviation = max_deviation.max((value - target).abs());
        }
    }
    Ok(TomographyReport {
        p_z,
        expected_p: p,
        transfer,
        max_deviation,
    })
}

/// Choi matrix `Σ_ij |i⟩⟨j| ⊗ E(|i⟩⟨j|)` of a linear map on `dim × dim` matrices.
pub fn choi_matrix<F>(dim: usize, map: F) -> Result<ComplexMatrix>
where
    F: Fn(&ComplexMatrix) -> Result<ComplexMatrix>,
{
    let mut choi = ComplexMatrix::zeros(dim * dim, dim * dim);
    for i in 0..dim {
        for j in 0..dim {
            let mut e = ComplexMatrix::zeros(dim, dim);
            e[(i, j)] = C64::new(1.0, 0.0);
            let img = map(&e)?;
            choi.view_mut((i * dim, j * dim), (dim, dim)).copy_from(&img);
        }
    }
    Ok(choi)
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(m: &ComplexMatrix) -> Result<f64> {
    let (values, _) = hermitian_eigen(m)?;
    Ok(values.into_iter().fold(f64::INFINITY, f64::min))
}
