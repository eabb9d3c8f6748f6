//! Stochastic-Hamiltonian unravelling of site dephasing.
//!
//! Each trajectory evolves a pure state under `H + Σ_j δε_j(t)|j⟩⟨j|` with
//! Gaussian site-energy fluctuations. Averaging the resulting populations
//! over many trajectories reproduces the dephasing master equation with
//! `γ_j = ω_j²` for white noise.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::SimulationGrid;
use crate::network::{qubit_hamiltonian_matrix, site_hamiltonian, ExcitonNetwork, MappingKind};
use crate::quantum::matrix::{hermitian_eigen, hermitian_expm, ComplexMatrix, C64};
use crate::quantum::rng::RandomStream;
use crate::stats::{accumulate, EnsembleSeries, RunningStat};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    White,
    OrnsteinUhlenbeck,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    pub kind: NoiseKind,
    /// Per-site variances `ω_j²`.
    pub amplitudes: Vec<f64>,
    /// Inverse correlation time of the OU process; unused for white noise.
    #[serde(default)]
    pub lambda: f64,
}

impl NoiseConfig {
    pub fn white(amplitudes: Vec<f64>) -> Result<Self> {
        let c = NoiseConfig {
            kind: NoiseKind::White,
            amplitudes,
            lambda: 0.0,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn ornstein_uhlenbeck(amplitudes: Vec<f64>, lambda: f64) -> Result<Self> {
        let c = NoiseConfig {
            kind: NoiseKind::OrnsteinUhlenbeck,
            amplitudes,
            lambda,
        };
        c.validate()?;
        Ok(c)
    }

    /// White noise reproducing the network's dephasing rates (`ω_j² = γ_j`).
    pub fn matching(network: &ExcitonNetwork) -> Self {
        NoiseConfig {
            kind: NoiseKind::White,
            amplitudes: network.dephasing().to_vec(),
            lambda: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(w) = self.amplitudes.iter().find(|w| !(**w >= 0.0 && w.is_finite())) {
            return Err(Error::Precondition(format!("noise variance {w} must be >= 0")));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::Precondition(format!("OU rate {} must be >= 0", self.lambda)));
        }
        Ok(())
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.amplitudes
            .iter()
            .map(|w2| {
                let g: f64 = rng.sample(StandardNormal);
                g * w2.sqrt()
            })
            .collect()
    }
}

/// One white-noise draw `δε_j ~ Normal(0, ω_j²)` for each of `n` sites.
pub fn sample_white_noise<R: Rng + ?Sized>(config: &NoiseConfig, rng: &mut R, n: usize) -> Result<Vec<f64>> {
    if config.kind != NoiseKind::White {
        return Err(Error::Precondition("sample_white_noise needs white noise".into()));
    }
    if config.amplitudes.len() != n {
        return Err(Error::Dimension {
            expected: n,
            found: config.amplitudes.len(),
        });
    }
    Ok(config.draw(rng))
}

/// Stationary initial value of the OU process.
pub fn ou_init<R: Rng + ?Sized>(config: &NoiseConfig, rng: &mut R) -> Vec<f64> {
    config.draw(rng)
}

/// Exact OU update `x' = x e^{-Λδτ} + G √(1 - e^{-2Λδτ})`, `G ~ Normal(0, ω²)`.
pub fn ou_step<R: Rng + ?Sized>(prev: &[f64], config: &NoiseConfig, dt: f64, rng: &mut R) -> Result<Vec<f64>> {
    if config.kind != NoiseKind::OrnsteinUhlenbeck {
        return Err(Error::Precondition("ou_step needs Ornstein-Uhlenbeck noise".into()));
    }
    if prev.len() != config.amplitudes.len() {
        return Err(Error::Dimension {
            expected: config.amplitudes.len(),
            found: prev.len(),
        });
    }
    let decay = (-config.lambda * dt).exp();
    let kick = (-(-2.0 * config.lambda * dt).exp_m1()).max(0.0).sqrt();
    Ok(prev
        .iter()
        .zip(config.draw(rng))
        .map(|(x, g)| x * decay + g * kick)
        .collect())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PropagatorMode {
    /// `exp(-i(Hδτ + H_fluc√δτ))` from a fresh eigendecomposition.
    #[default]
    Exact,
    /// `exp(-iHδτ)·exp(-iH_fluc√δτ)`.
    Split,
}

/// Short-time propagator for one noise draw. `sites[j]` is the basis index
/// carrying the fluctuation `δε_j`.
pub fn step_propagator(
    h: &ComplexMatrix,
    sites: &[usize],
    noise: &[f64],
    dt: f64,
    mode: PropagatorMode,
) -> Result<ComplexMatrix> {
    check_noise(h.nrows(), sites, noise)?;
    let sq = dt.sqrt();
    match mode {
        PropagatorMode::Exact => {
            let mut a = h * C64::new(dt, 0.0);
            for (&k, &e) in sites.iter().zip(noise) {
                a[(k, k)] += C64::new(e * sq, 0.0);
            }
            hermitian_expm(&a, 1.0)
        }
        PropagatorMode::Split => {
            let mut u = hermitian_expm(h, dt)?;
            for (&k, &e) in sites.iter().zip(noise) {
                let phase = C64::from_polar(1.0, -e * sq);
                u.column_mut(k).iter_mut().for_each(|z| *z *= phase);
            }
            Ok(u)
        }
    }
}

fn check_noise(dim: usize, sites: &[usize], noise: &[f64]) -> Result<()> {
    if sites.len() != noise.len() {
        return Err(Error::Dimension {
            expected: sites.len(),
            found: noise.len(),
        });
    }
    if noise.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numeric("non-finite noise value".into()));
    }
    if let Some(&k) = sites.iter().find(|&&k| k >= dim) {
        return Err(Error::Dimension { expected: dim, found: k });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Readout {
    /// Record `|⟨j|ψ⟩|²` directly.
    #[default]
    Exact,
    /// Record one Bernoulli shot of `|⟨j|ψ⟩|²`.
    SingleShot,
}

/// One stochastic trajectory's estimator series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub id: u64,
    /// Target-site estimator at `s = 0..=S`.
    pub estimator: Vec<f64>,
    /// All site populations per sample, if requested.
    pub populations: Option<Vec<Vec<f64>>>,
    /// Key of the random stream that produced the record.
    pub stream: u64,
    pub noise: Option<NoiseKind>,
    /// `| ‖ψ‖ - 1 |` at the end of the run.
    pub norm_drift: f64,
}

/// Precomputed data for running noise trajectories on one network.
#[derive(Debug, Clone)]
pub struct NoiseProblem {
    hamiltonian: ComplexMatrix,
    /// Basis index of each site.
    sites: Vec<usize>,
    noise: NoiseConfig,
    mode: PropagatorMode,
    grid: SimulationGrid,
    source: usize,
    target: usize,
    /// `exp(-iHδτ)` for split mode.
    coherent_step: Option<ComplexMatrix>,
}

impl NoiseProblem {
    pub fn new(
        network: &ExcitonNetwork,
        mapping: MappingKind,
        noise: NoiseConfig,
        grid: SimulationGrid,
        source: usize,
        target: usize,
        mode: PropagatorMode,
    ) -> Result<Self> {
        network.check_site(source)?;
        network.check_site(target)?;
        grid.validate()?;
        noise.validate()?;
        let n = network.n_sites();
        if noise.amplitudes.len() != n {
            return Err(Error::Dimension {
                expected: n,
                found: noise.amplitudes.len(),
            });
        }
        let hamiltonian = match mapping {
            MappingKind::Physical => qubit_hamiltonian_matrix(network)?,
            MappingKind::Algorithmic => {
                let dim = 1 << mapping.n_qubits(n);
                let h = site_hamiltonian(network);
                let mut full = ComplexMatrix::zeros(dim, dim);
                full.view_mut((0, 0), (n, n)).copy_from(&h);
                full
            }
        };
        let sites = (0..n).map(|j| mapping.encode(j, n)).collect::<Result<Vec<_>>>()?;
        let coherent_step = match mode {
            PropagatorMode::Split => Some(hermitian_expm(&hamiltonian, grid.dt)?),
            PropagatorMode::Exact => None,
        };
        Ok(NoiseProblem {
            hamiltonian,
            sites,
            noise,
            mode,
            grid,
            source,
            target,
            coherent_step,
        })
    }

    pub fn grid(&self) -> &SimulationGrid {
        &self.grid
    }

    pub fn mode(&self) -> PropagatorMode {
        self.mode
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.nrows()
    }

    fn apply_step(&self, psi: &mut Vec<C64>, noise: &[f64]) -> Result<()> {
        let dt = self.grid.dt;
        let sq = dt.sqrt();
        match &self.coherent_step {
            Some(u) => {
                for (&k, &e) in self.sites.iter().zip(noise) {
                    psi[k] *= C64::from_polar(1.0, -e * sq);
                }
                *psi = matvec(u, psi);
            }
            None => {
                let mut a = &self.hamiltonian * C64::new(dt, 0.0);
                for (&k, &e) in self.sites.iter().zip(noise) {
                    a[(k, k)] += C64::new(e * sq, 0.0);
                }
                let (values, vectors) = hermitian_eigen(&a)?;
                let mut coeffs = adjoint_matvec(&vectors, psi);
                for (c, &l) in coeffs.iter_mut().zip(&values) {
                    *c *= C64::from_polar(1.0, -l);
                }
                *psi = matvec(&vectors, &coeffs);
            }
        }
        Ok(())
    }

    /// Runs one trajectory. Noise is drawn from `noise_rng` (all sites in
    /// order, once per step); single shots use `readout_rng`.
    pub fn run<R: Rng + ?Sized>(
        &self,
        id: u64,
        noise_rng: &mut R,
        readout_rng: &mut R,
        readout: Readout,
        keep_populations: bool,
    ) -> Result<TrajectoryRecord> {
        let mut psi = vec![C64::new(0.0, 0.0); self.dim()];
        psi[self.sites[self.source]] = C64::new(1.0, 0.0);
        let target = self.sites[self.target];
        let mut estimator = Vec::with_capacity(self.grid.n_samples());
        let mut populations = keep_populations.then(|| Vec::with_capacity(self.grid.n_samples()));
        let mut fluct = match self.noise.kind {
            NoiseKind::OrnsteinUhlenbeck => ou_init(&self.noise, noise_rng),
            NoiseKind::White => vec![0.0; self.sites.len()],
        };
        for s in 0..=self.grid.steps {
            if s > 0 {
                fluct = match self.noise.kind {
                    NoiseKind::White => self.noise.draw(noise_rng),
                    NoiseKind::OrnsteinUhlenbeck if s == 1 => fluct,
                    NoiseKind::OrnsteinUhlenbeck => ou_step(&fluct, &self.noise, self.grid.dt, noise_rng)?,
                };
                self.apply_step(&mut psi, &fluct)?;
            }
            let p = psi[target].norm_sqr().min(1.0);
            estimator.push(match readout {
                Readout::Exact => p,
                Readout::SingleShot => f64::from(u8::from(readout_rng.random::<f64>() < p)),
            });
            if let Some(pops) = populations.as_mut() {
                pops.push(self.sites.iter().map(|&k| psi[k].norm_sqr()).collect());
            }
        }
        let norm_drift = (psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt() - 1.0).abs();
        if norm_drift > 1e-6 {
            return Err(Error::Numeric(format!("trajectory norm drifted by {norm_drift:.3e}")));
        }
        Ok(TrajectoryRecord {
            id,
            estimator,
            populations,
            stream: 0,
            noise: Some(self.noise.kind),
            norm_drift,
        })
    }

    /// Exact target populations for a prescribed fluctuation record, one
    /// row of site values per step. Used to couple runs at different steps.
    pub fn run_with_fluctuations(&self, fluctuations: &[Vec<f64>]) -> Result<Vec<f64>> {
        if fluctuations.len() != self.grid.steps {
            return Err(Error::Dimension {
                expected: self.grid.steps,
                found: fluctuations.len(),
            });
        }
        let mut psi = vec![C64::new(0.0, 0.0); self.dim()];
        psi[self.sites[self.source]] = C64::new(1.0, 0.0);
        let target = self.sites[self.target];
        let mut out = Vec::with_capacity(self.grid.n_samples());
        out.push(psi[target].norm_sqr());
        for row in fluctuations {
            if row.len() != self.sites.len() {
                return Err(Error::Dimension {
                    expected: self.sites.len(),
                    found: row.len(),
                });
            }
            self.apply_step(&mut psi, row)?;
            out.push(psi[target].norm_sqr().min(1.0));
        }
        Ok(out)
    }

    /// Trajectory `id` with streams derived from `(seed, path, id)`.
    pub fn run_seeded(
        &self,
        seed: u64,
        path: &[u64],
        id: u64,
        readout: Readout,
        keep_populations: bool,
    ) -> Result<TrajectoryRecord> {
        let (mut noise_rng, mut readout_rng, key) = trajectory_streams(seed, path, id);
        let mut rec = self.run(id, &mut noise_rng, &mut readout_rng, readout, keep_populations)?;
        rec.stream = key;
        Ok(rec)
    }

    /// Averages `count` seeded trajectories in parallel.
    pub fn ensemble(&self, seed: u64, path: &[u64], count: usize, readout: Readout) -> Result<EnsembleSeries> {
        accumulate(count, self.grid.n_samples(), self.grid.dt, |k| {
            Ok(self.run_seeded(seed, path, k as u64, readout, false)?.estimator)
        })
    }
}

const NOISE_STREAM: u64 = 1;
const READOUT_STREAM: u64 = 2;

/// Noise and readout streams of trajectory `id`, plus the trajectory key.
pub(crate) fn trajectory_streams(seed: u64, path: &[u64], id: u64) -> (RandomStream, RandomStream, u64) {
    let mut full = path.to_vec();
    full.push(id);
    let key = crate::quantum::rng::derive_key(seed, &full);
    (
        RandomStream::child(seed, &full, NOISE_STREAM),
        RandomStream::child(seed, &full, READOUT_STREAM),
        key,
    )
}

pub(crate) fn matvec(m: &ComplexMatrix, v: &[C64]) -> Vec<C64> {
    let n = m.nrows();
    let mut out = vec![C64::new(0.0, 0.0); n];
    for (c, &x) in v.iter().enumerate() {
        if x == C64::new(0.0, 0.0) {
            continue;
        }
        for (o, &a) in out.iter_mut().zip(m.column(c).iter()) {
            *o += a * x;
        }
    }
    out
}

fn adjoint_matvec(m: &ComplexMatrix, v: &[C64]) -> Vec<C64> {
    (0..m.ncols())
        .map(|c| m.column(c).iter().zip(v).map(|(a, x)| a.conj() * x).sum())
        .collect()
}

/// Convenience wrapper around [`NoiseProblem::run`].
#[allow(clippy::too_many_arguments)]
pub fn run_noise_trajectory<R: Rng + ?Sized>(
    network: &ExcitonNetwork,
    mapping: MappingKind,
    noise: &NoiseConfig,
    grid: &SimulationGrid,
    source: usize,
    target: usize,
    noise_rng: &mut R,
    readout_rng: &mut R,
    readout: Readout,
) -> Result<TrajectoryRecord> {
    NoiseProblem::new(network, mapping, noise.clone(), *grid, source, target, PropagatorMode::Exact)?
        .run(0, noise_rng, readout_rng, readout, false)
}

/// Pointwise mean and standard error of already computed records.
pub fn ensemble_average(records: &[TrajectoryRecord], dt: f64) -> Result<EnsembleSeries> {
    let first = records.first().ok_or(Error::Empty("trajectory records"))?;
    let len = first.estimator.len();
    let mut stats = vec![RunningStat::default(); len];
    let mut eta = RunningStat::default();
    for r in records {
        if r.estimator.len() != len {
            return Err(Error::Dimension {
                expected: len,
                found: r.estimator.len(),
            });
        }
        eta.push(r.estimator.iter().sum::<f64>() * dt);
        stats.iter_mut().zip(&r.estimator).for_each(|(s, &x)| s.push(x));
    }
    Ok(EnsembleSeries::from_stats(dt, &stats, &eta))
}

/// Monte Carlo estimate of `E[U ρ U†]` over `samples` white-noise draws.
pub fn noise_averaged_step(
    hamiltonian: &ComplexMatrix,
    sites: &[usize],
    noise: &NoiseConfig,
    rho: &ComplexMatrix,
    dt: f64,
    samples: usize,
    rng: &mut RandomStream,
) -> Result<ComplexMatrix> {
    if samples == 0 {
        return Err(Error::EmptySample);
    }
    let mut acc = ComplexMatrix::zeros(rho.nrows(), rho.ncols());
    for _ in 0..samples {
        let d = sample_white_noise(noise, rng, sites.len())?;
        let u = step_propagator(hamiltonian, sites, &d, dt, PropagatorMode::Exact)?;
        acc += &u * rho * u.adjoint();
    }
    Ok(acc / C64::new(samples as f64, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lindblad::{oracle_series, LindbladProblem};
    use crate::network::fixtures;
    use crate::quantum::matrix::{is_unitary, max_abs_diff, real_diagonal};

    fn white(n: usize, w2: f64) -> NoiseConfig {
        NoiseConfig::white(vec![w2; n]).unwrap()
    }

    #[test]
    fn zero_variance_gives_zero_noise() {
        let mut rng = RandomStream::new(1, &[]);
        assert_eq!(sample_white_noise(&white(3, 0.0), &mut rng, 3).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn white_noise_variance() {
        let mut rng = RandomStream::new(2, &[]);
        let cfg = white(1, 1.0);
        let mut s = RunningStat::default();
        for _ in 0..1_000_000 {
            s.push(sample_white_noise(&cfg, &mut rng, 1).unwrap()[0]);
        }
        assert!((0.994..=1.006).contains(&s.variance()), "{}", s.variance());
    }

    #[test]
    fn distinct_streams_are_uncorrelated() {
        let cfg = white(1, 1.0);
        let mut a = RandomStream::new(3, &[0]);
        let mut b = RandomStream::new(3, &[1]);
        let n = 100_000;
        let mut acc = 0.0;
        for _ in 0..n {
            acc += sample_white_noise(&cfg, &mut a, 1).unwrap()[0] * sample_white_noise(&cfg, &mut b, 1).unwrap()[0];
        }
        assert!((acc / n as f64).abs() < 5.0 / (n as f64).sqrt());
    }

    #[test]
    fn wrong_kind_is_rejected() {
        let ou = NoiseConfig::ornstein_uhlenbeck(vec![1.0], 1.0).unwrap();
        let mut rng = RandomStream::new(4, &[]);
        assert!(sample_white_noise(&ou, &mut rng, 1).is_err());
        assert!(ou_step(&[0.0], &white(1, 1.0), 0.1, &mut rng).is_err());
        assert!(NoiseConfig::white(vec![-1.0]).is_err());
    }

    #[test]
    fn frozen_ou_process() {
        let cfg = NoiseConfig::ornstein_uhlenbeck(vec![2.0, 0.5], 0.0).unwrap();
        let mut rng = RandomStream::new(5, &[]);
        let x0 = ou_init(&cfg, &mut rng);
        let mut x = x0.clone();
        for _ in 0..100 {
            x = ou_step(&x, &cfg, 0.1, &mut rng).unwrap();
        }
        assert_eq!(x, x0);
    }

    #[test]
    fn ou_autocorrelation_matches_exponential() {
        let (lambda, dt, n) = (1.0, 0.1, 1_000_000);
        let cfg = NoiseConfig::ornstein_uhlenbeck(vec![1.0], lambda).unwrap();
        let mut rng = RandomStream::new(6, &[]);
        let mut xs = Vec::with_capacity(n);
        let mut x = ou_init(&cfg, &mut rng);
        for _ in 0..n {
            xs.push(x[0]);
            x = ou_step(&x, &cfg, dt, &mut rng).unwrap();
        }
        let var = xs.iter().map(|x| x * x).sum::<f64>() / n as f64;
        assert!((var - 1.0).abs() < 0.02);
        for k in 1..=20 {
            let c = xs.iter().zip(&xs[k..]).map(|(a, b)| a * b).sum::<f64>() / (n - k) as f64;
            let rho = (-lambda * k as f64 * dt).exp();
            // Effective sample size of an AR(1) series with coefficient r.
            let r = (-lambda * dt).exp();
            let sigma = ((1.0 + r * r) / (1.0 - r * r) / n as f64).sqrt() * (1.0 + rho);
            assert!((c - rho).abs() < 5.0 * sigma, "lag {k}: {c} vs {rho}");
        }
    }

    #[test]
    fn fast_ou_is_uncorrelated() {
        let cfg = NoiseConfig::ornstein_uhlenbeck(vec![1.0], 1e3).unwrap();
        let mut rng = RandomStream::new(7, &[]);
        let mut x = ou_init(&cfg, &mut rng);
        let (mut cross, mut sq) = (0.0, 0.0);
        let n = 100_000;
        for _ in 0..n {
            let y = ou_step(&x, &cfg, 0.1, &mut rng).unwrap();
            cross += x[0] * y[0];
            sq += y[0] * y[0];
            x = y;
        }
        assert!((cross / n as f64).abs() < 5.0 / (n as f64).sqrt());
        assert!((sq / n as f64 - 1.0).abs() < 0.03);
    }

    #[test]
    fn propagator_limits() {
        let net = fixtures::disordered_ring(0.1);
        let h = site_hamiltonian(&net);
        let sites: Vec<usize> = (0..4).collect();
        let zero = step_propagator(&h, &sites, &[0.0; 4], 0.01, PropagatorMode::Exact).unwrap();
        let split = step_propagator(&h, &sites, &[0.0; 4], 0.01, PropagatorMode::Split).unwrap();
        let exact = hermitian_expm(&h, 0.01).unwrap();
        assert!(max_abs_diff(&zero, &exact) < 1e-13);
        assert!(max_abs_diff(&split, &exact) < 1e-13);

        let noise = [0.3, -1.2, 0.0, 2.0];
        let u = step_propagator(&ComplexMatrix::zeros(4, 4), &sites, &noise, 0.04, PropagatorMode::Exact).unwrap();
        for (k, e) in noise.iter().enumerate() {
            assert!((u[(k, k)] - C64::from_polar(1.0, -e * 0.2)).norm() < 1e-13);
        }
        assert!(is_unitary(&u));
        assert!(step_propagator(&h, &sites, &[f64::NAN, 0.0, 0.0, 0.0], 0.01, PropagatorMode::Exact).is_err());
    }

    #[test]
    fn split_error_scaling() {
        let net = fixtures::disordered_ring(0.1);
        let h = site_hamiltonian(&net);
        let sites: Vec<usize> = (0..4).collect();
        let noise = [0.7, -0.4, 1.1, -0.9];
        let gap = |dt: f64| {
            let a = step_propagator(&h, &sites, &noise, dt, PropagatorMode::Exact).unwrap();
            let b = step_propagator(&h, &sites, &noise, dt, PropagatorMode::Split).unwrap();
            max_abs_diff(&a, &b)
        };
        assert!(gap(1e-2) / gap(1e-3) >= 20.0);
    }

    #[test]
    fn noiseless_trajectory_matches_unitary_curve() {
        let net = fixtures::disordered_ring(0.0);
        let grid = SimulationGrid::from_horizon(10.0, 0.01).unwrap();
        for mapping in [MappingKind::Algorithmic, MappingKind::Physical] {
            let p = NoiseProblem::new(&net, mapping, white(4, 0.0), grid, 0, 2, PropagatorMode::Exact).unwrap();
            let rec = p.run_seeded(1, &[], 0, Readout::Exact, false).unwrap();
            let h = site_hamiltonian(&net);
            for (s, &x) in rec.estimator.iter().enumerate() {
                let u = hermitian_expm(&h, s as f64 * grid.dt).unwrap();
                assert!((x - u[(2, 0)].norm_sqr()).abs() <= 1e-8);
            }
        }
    }

    #[test]
    fn trajectories_are_reproducible_and_unitary() {
        let net = fixtures::disordered_ring(0.1);
        let grid = SimulationGrid::from_horizon(40.0, 0.01).unwrap();
        let p = NoiseProblem::new(&net, MappingKind::Algorithmic, NoiseConfig::matching(&net), grid, 0, 2, PropagatorMode::Exact)
            .unwrap();
        let a = p.run_seeded(9, &[1], 3, Readout::SingleShot, true).unwrap();
        let b = p.run_seeded(9, &[1], 3, Readout::SingleShot, true).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.estimator.len(), 4001);
        assert!(a.norm_drift <= 1e-9);
        assert!(a.estimator.iter().all(|&x| x == 0.0 || x == 1.0));
        let c = p.run_seeded(9, &[1], 4, Readout::SingleShot, false).unwrap();
        assert_ne!(a.estimator, c.estimator);
    }

    #[test]
    fn single_site_stays_put() {
        let net = ExcitonNetwork::new(vec![0.3], vec![], vec![0.5]).unwrap();
        let grid = SimulationGrid::from_horizon(1.0, 0.01).unwrap();
        let p = NoiseProblem::new(&net, MappingKind::Physical, NoiseConfig::matching(&net), grid, 0, 0, PropagatorMode::Exact)
            .unwrap();
        let rec = p.run_seeded(1, &[], 0, Readout::Exact, false).unwrap();
        assert!(rec.estimator.iter().all(|&x| (x - 1.0).abs() < 1e-12));
    }

    #[test]
    fn identical_records_have_zero_stderr() {
        let rec = TrajectoryRecord {
            id: 0,
            estimator: vec![0.1, 0.5, 0.2],
            populations: None,
            stream: 0,
            noise: None,
            norm_drift: 0.0,
        };
        let e = ensemble_average(&vec![rec.clone(); 5], 0.1).unwrap();
        assert_eq!(e.mean, rec.estimator);
        assert!(e.stderr.iter().all(|&s| s == 0.0));
        assert!(ensemble_average(&[], 0.1).is_err());
        let mut short = rec.clone();
        short.estimator.pop();
        assert!(ensemble_average(&[rec, short], 0.1).is_err());
    }

    #[test]
    fn exact_readout_ensemble_tracks_oracle() {
        let net = fixtures::disordered_ring(0.1);
        let grid = SimulationGrid::from_horizon(40.0, 0.01).unwrap();
        let p = NoiseProblem::new(&net, MappingKind::Algorithmic, NoiseConfig::matching(&net), grid, 0, 2, PropagatorMode::Split)
            .unwrap();
        let e = p.ensemble(11, &[], 200, Readout::Exact).unwrap();
        let oracle = oracle_series(&net, &grid, 0, 2).unwrap().target_curve();
        for ((m, s), o) in e.mean.iter().zip(&e.stderr).zip(&oracle) {
            assert!((m - o).abs() <= 5.0 * s + 1e-3, "{m} vs {o} (stderr {s})");
        }
    }

    #[test]
    fn split_and_exact_ensembles_agree() {
        let net = fixtures::disordered_ring(0.3);
        let grid = SimulationGrid::from_horizon(5.0, 0.01).unwrap();
        let mk = |mode| {
            NoiseProblem::new(&net, MappingKind::Algorithmic, NoiseConfig::matching(&net), grid, 0, 2, mode)
                .unwrap()
                .ensemble(3, &[], 100, Readout::Exact)
                .unwrap()
        };
        let (a, b) = (mk(PropagatorMode::Exact), mk(PropagatorMode::Split));
        assert!(a.max_deviation(&b.mean) < 0.02);
    }

    #[test]
    fn one_step_average_matches_generator() {
        let net = fixtures::disordered_ring(0.1);
        let problem = LindbladProblem::site_dephasing(&net, 0).unwrap();
        let rho = real_diagonal(&[0.4, 0.3, 0.2, 0.1]) + ComplexMatrix::from_fn(4, 4, |r, c| {
            if r == c { C64::new(0.0, 0.0) } else { C64::new(0.05, 0.02 * (r as f64 - c as f64)) }
        });
        let dt = 1e-2;
        let mut rng = RandomStream::new(12, &[]);
        let avg = noise_averaged_step(problem.hamiltonian(), &[0, 1, 2, 3], &NoiseConfig::matching(&net), &rho, dt, 20_000, &mut rng)
            .unwrap();
        let first_order = &rho + problem.rhs(&rho).unwrap() * C64::new(dt, 0.0);
        assert!(max_abs_diff(&avg, &first_order) < 2e-3);
    }
}
