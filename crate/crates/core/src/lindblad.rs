//! Reference solution of the site-dephasing master equation.
//!
//! `ρ̇ = -i[H, ρ] + Σ_j γ_j (L_j ρ L_j† - ½{L_j†L_j, ρ})`, integrated with
//! fixed-step RK4 at ten internal steps per output sample. Both the
//! site-basis form (`L_j = |j⟩⟨j|`, rate `γ_j`) and the qubit form
//! (`L_j = σ_z^j`, rate `γ_j/4`) are available.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::SimulationGrid;
use crate::network::{encode_physical, qubit_hamiltonian_matrix, site_hamiltonian, ExcitonNetwork};
use crate::quantum::matrix::{hermiticity_error, is_hermitian, max_abs_diff, real_diagonal, ComplexMatrix, C64};
use crate::quantum::state::BasisLayout;

/// Internal RK4 steps per output sample.
pub const SUBSTEPS: usize = 10;
const HALF_STEP_TOL: f64 = 1e-6;
const POSITIVITY_TOL: f64 = -1e-7;

#[derive(Debug, Clone)]
pub struct LindbladProblem {
    hamiltonian: ComplexMatrix,
    jump_ops: Vec<ComplexMatrix>,
    rates: Vec<f64>,
    initial: ComplexMatrix,
    /// Basis indices reported as site populations, in site order.
    readout: Vec<usize>,
    /// Elementwise dissipator when every jump operator is diagonal.
    diagonal_dissipator: Option<ComplexMatrix>,
}

impl LindbladProblem {
    pub fn new(
        hamiltonian: ComplexMatrix,
        jump_ops: Vec<ComplexMatrix>,
        rates: Vec<f64>,
        initial: ComplexMatrix,
        readout: Vec<usize>,
    ) -> Result<Self> {
        let dim = hamiltonian.nrows();
        if !is_hermitian(&hamiltonian) {
            return Err(Error::Precondition("Hamiltonian is not Hermitian".into()));
        }
        if jump_ops.len() != rates.len() {
            return Err(Error::Dimension {
                expected: jump_ops.len(),
                found: rates.len(),
            });
        }
        for op in jump_ops.iter().chain(std::iter::once(&initial)) {
            if op.nrows() != dim || op.ncols() != dim {
                return Err(Error::Dimension {
                    expected: dim,
                    found: op.nrows(),
                });
            }
        }
        if let Some(r) = rates.iter().find(|r| !(**r >= 0.0 && r.is_finite())) {
            return Err(Error::Precondition(format!("rate {r} must be >= 0")));
        }
        if let Some(&k) = readout.iter().find(|&&k| k >= dim) {
            return Err(Error::Precondition(format!("readout index {k} outside dimension {dim}")));
        }
        let diagonal_dissipator = diagonal_dissipator(&jump_ops, &rates, dim);
        Ok(LindbladProblem {
            hamiltonian,
            jump_ops,
            rates,
            initial,
            readout,
            diagonal_dissipator,
        })
    }

    /// Site-basis problem with projector jumps `|j⟩⟨j|` at rates `γ_j`,
    /// starting localized on `source`.
    pub fn site_dephasing(network: &ExcitonNetwork, source: usize) -> Result<Self> {
        network.check_site(source)?;
        let n = network.n_sites();
        let jumps = (0..n)
            .map(|j| {
                let mut p = ComplexMatrix::zeros(n, n);
                p[(j, j)] = C64::new(1.0, 0.0);
                p
            })
            .collect();
        let mut rho0 = ComplexMatrix::zeros(n, n);
        rho0[(source, source)] = C64::new(1.0, 0.0);
        Self::new(
            site_hamiltonian(network),
            jumps,
            network.dephasing().to_vec(),
            rho0,
            (0..n).collect(),
        )
    }

    /// Qubit-register problem on `2^N` states: qubit Hamiltonian, `σ_z^j`
    /// jumps at `Γ_j = γ_j/4`. Populations are read on the single-exciton
    /// states.
    pub fn qubit_form(network: &ExcitonNetwork, source: usize) -> Result<Self> {
        network.check_site(source)?;
        let n = network.n_sites();
        let dim = 1 << n;
        let jumps = (0..n)
            .map(|j| {
                let mask = 1usize << (n - 1 - j);
                let signs: Vec<f64> = (0..dim).map(|k| if k & mask != 0 { -1.0 } else { 1.0 }).collect();
                real_diagonal(&signs)
            })
            .collect();
        let rates = network.dephasing().iter().map(|g| g / 4.0).collect();
        let start = encode_physical(source, n)?;
        let mut rho0 = ComplexMatrix::zeros(dim, dim);
        rho0[(start, start)] = C64::new(1.0, 0.0);
        let readout = (0..n).map(|j| encode_physical(j, n)).collect::<Result<_>>()?;
        Self::new(qubit_hamiltonian_matrix(network)?, jumps, rates, rho0, readout)
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.nrows()
    }

    pub fn hamiltonian(&self) -> &ComplexMatrix {
        &self.hamiltonian
    }

    pub fn initial(&self) -> &ComplexMatrix {
        &self.initial
    }

    pub fn readout(&self) -> &[usize] {
        &self.readout
    }

    pub fn layout(&self) -> BasisLayout {
        BasisLayout::new(self.dim().trailing_zeros() as usize)
    }

    /// Same problem with a different initial density matrix.
    pub fn with_initial(&self, initial: ComplexMatrix) -> Result<Self> {
        Self::new(
            self.hamiltonian.clone(),
            self.jump_ops.clone(),
            self.rates.clone(),
            initial,
            self.readout.clone(),
        )
    }

    /// Right-hand side of the master equation at `rho`.
    pub fn rhs(&self, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
        if rho.nrows() != self.dim() || rho.ncols() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                found: rho.nrows(),
            });
        }
        Ok(self.rhs_unchecked(rho))
    }

    fn rhs_unchecked(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        let h = &self.hamiltonian;
        let mut out = (h * rho - rho * h) * C64::new(0.0, -1.0);
        match &self.diagonal_dissipator {
            Some(d) => out += d.component_mul(rho),
            None => {
                for (l, &g) in self.jump_ops.iter().zip(&self.rates) {
                    if g == 0.0 {
                        continue;
                    }
                    let ld = l.adjoint();
                    let ldl = &ld * l;
                    let term = l * rho * &ld - (&ldl * rho + rho * &ldl) * C64::new(0.5, 0.0);
                    out += term * C64::new(g, 0.0);
                }
            }
        }
        out
    }

    fn rk4_step(&self, rho: &ComplexMatrix, h: f64) -> ComplexMatrix {
        let half = C64::new(h / 2.0, 0.0);
        let full = C64::new(h, 0.0);
        let k1 = self.rhs_unchecked(rho);
        let k2 = self.rhs_unchecked(&(rho + &k1 * half));
        let k3 = self.rhs_unchecked(&(rho + &k2 * half));
        let k4 = self.rhs_unchecked(&(rho + &k3 * full));
        rho + (k1 + (k2 + k3) * C64::new(2.0, 0.0) + k4) * C64::new(h / 6.0, 0.0)
    }

    fn advance(&self, rho: &ComplexMatrix, interval: f64, steps: usize) -> ComplexMatrix {
        let h = interval / steps as f64;
        let mut r = rho.clone();
        for _ in 0..steps {
            r = self.rk4_step(&r, h);
        }
        r
    }
}

fn diagonal_dissipator(jumps: &[ComplexMatrix], rates: &[f64], dim: usize) -> Option<ComplexMatrix> {
    let is_diag = |m: &ComplexMatrix| {
        (0..dim).all(|r| (0..dim).all(|c| r == c || m[(r, c)] == C64::new(0.0, 0.0)))
    };
    if !jumps.iter().all(is_diag) {
        return None;
    }
    let mut d = ComplexMatrix::zeros(dim, dim);
    for (l, &g) in jumps.iter().zip(rates) {
        for r in 0..dim {
            for c in 0..dim {
                let (a, b) = (l[(r, r)], l[(c, c)]);
                d[(r, c)] += (a * b.conj() - C64::new(0.5 * (a.norm_sqr() + b.norm_sqr()), 0.0)) * g;
            }
        }
    }
    Some(d)
}

/// Populations `p(j, s·dt | source)` sampled on a uniform grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationSeries {
    pub dt: f64,
    pub source: usize,
    pub target: usize,
    /// One row per sample time, one entry per site.
    pub populations: Vec<Vec<f64>>,
}

impl PopulationSeries {
    pub fn len(&self) -> usize {
        self.populations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.populations.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|s| s as f64 * self.dt).collect()
    }

    pub fn site_curve(&self, site: usize) -> Vec<f64> {
        self.populations.iter().map(|row| row[site]).collect()
    }

    pub fn target_curve(&self) -> Vec<f64> {
        self.site_curve(self.target)
    }

    pub fn efficiency(&self) -> Result<f64> {
        transport_efficiency(&self.target_curve(), self.dt)
    }
}

/// Health indicators collected while integrating.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct IntegrationDiagnostics {
    pub max_trace_drift: f64,
    pub max_hermiticity_error: f64,
    /// Most negative diagonal element seen; below `-1e-7` is reported.
    pub min_population: f64,
    pub half_step_discrepancy: f64,
}

#[derive(Debug, Clone)]
pub struct Integration {
    pub series: PopulationSeries,
    pub diagnostics: IntegrationDiagnostics,
    /// Full density matrices at every sample, if requested.
    pub snapshots: Option<Vec<ComplexMatrix>>,
}

/// Integrates `problem` over `grid` and samples every `grid.dt`.
pub fn integrate_master_equation(
    problem: &LindbladProblem,
    grid: &SimulationGrid,
    source: usize,
    target: usize,
    keep_snapshots: bool,
) -> Result<Integration> {
    if !(grid.dt > 0.0 && grid.dt.is_finite()) {
        return Err(Error::Precondition("dt must be positive".into()));
    }
    if target >= problem.readout.len() || source >= problem.readout.len() {
        return Err(Error::Precondition("source/target outside readout sites".into()));
    }

    let coarse = problem.advance(&problem.initial, grid.dt, SUBSTEPS);
    let fine = problem.advance(&problem.initial, grid.dt, 2 * SUBSTEPS);
    let discrepancy = max_abs_diff(&coarse, &fine);
    if discrepancy > HALF_STEP_TOL {
        return Err(Error::StepTooLarge {
            discrepancy,
            tolerance: HALF_STEP_TOL,
        });
    }

    let mut diagnostics = IntegrationDiagnostics {
        half_step_discrepancy: discrepancy,
        min_population: f64::INFINITY,
        ..Default::default()
    };
    let mut populations = Vec::with_capacity(grid.n_samples());
    let mut snapshots = keep_snapshots.then(|| Vec::with_capacity(grid.n_samples()));
    let mut rho = problem.initial.clone();
    for s in 0..=grid.steps {
        if s > 0 {
            rho = if s == 1 { coarse.clone() } else { problem.advance(&rho, grid.dt, SUBSTEPS) };
        }
        let trace = rho.trace();
        diagnostics.max_trace_drift = diagnostics.max_trace_drift.max((trace - C64::new(1.0, 0.0)).norm());
        diagnostics.max_hermiticity_error = diagnostics.max_hermiticity_error.max(hermiticity_error(&rho));
        let min_diag = (0..rho.nrows()).map(|k| rho[(k, k)].re).fold(f64::INFINITY, f64::min);
        diagnostics.min_population = diagnostics.min_population.min(min_diag);
        populations.push(problem.readout.iter().map(|&k| rho[(k, k)].re).collect());
        if let Some(snaps) = snapshots.as_mut() {
            snaps.push(rho.clone());
        }
    }
    if diagnostics.min_population < POSITIVITY_TOL {
        log::warn!(
            "master-equation populations went negative ({:.3e}); consider a smaller dt",
            diagnostics.min_population
        );
    }
    Ok(Integration {
        series: PopulationSeries {
            dt: grid.dt,
            source,
            target,
            populations,
        },
        diagnostics,
        snapshots,
    })
}

/// Left Riemann sum `Σ_{s=0}^{S} p_s dt` of a uniformly sampled curve.
pub fn transport_efficiency(values: &[f64], dt: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Empty("population series"));
    }
    Ok(values.iter().sum::<f64>() * dt)
}

/// Transport efficiency as a function of the dephasing rate.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyCurve {
    /// `(γ/V, η)` pairs in increasing `γ`.
    pub points: Vec<(f64, f64)>,
}

impl EfficiencyCurve {
    /// Index of the largest efficiency.
    pub fn argmax(&self) -> Option<usize> {
        self.points
            .iter()
            .enumerate()
            .max_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
            .map(|(k, _)| k)
    }
}

/// Convenience wrapper: site-basis oracle populations for a network.
pub fn oracle_series(
    network: &ExcitonNetwork,
    grid: &SimulationGrid,
    source: usize,
    target: usize,
) -> Result<PopulationSeries> {
    network.check_site(target)?;
    let problem = LindbladProblem::site_dephasing(network, source)?;
    Ok(integrate_master_equation(&problem, grid, source, target, false)?.series)
}
