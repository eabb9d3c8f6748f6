//! Exciton networks, graph Laplacians and the two register mappings.
//!
//! Sites and graph nodes are indexed from zero inside the library. Energies
//! and couplings are in units of the nearest-neighbour coupling `V`, times
//! in `ħ/V`, rates in `V/ħ`.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::matrix::{hermitian_expm, real_diagonal, ComplexMatrix, C64, ONE, ZERO};

/// Simple undirected graph with a uniform hopping rate.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    hop_rate: f64,
}

impl Graph {
    pub fn new(n: usize, edges: Vec<(usize, usize)>, hop_rate: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Precondition("graph needs at least one node".into()));
        }
        if !(hop_rate > 0.0 && hop_rate.is_finite()) {
            return Err(Error::Precondition(format!("hop rate must be positive, got {hop_rate}")));
        }
        let edges = normalize_edges(n, edges.into_iter())?;
        Ok(Graph { n, edges, hop_rate })
    }

    pub fn cycle(n: usize, hop_rate: f64) -> Result<Self> {
        Self::new(n, cycle_edges(n), hop_rate)
    }

    pub fn path(n: usize, hop_rate: f64) -> Result<Self> {
        Self::new(n, (1..n).map(|b| (b - 1, b)).collect(), hop_rate)
    }

    pub fn complete(n: usize, hop_rate: f64) -> Result<Self> {
        Self::new(n, complete_edges(n), hop_rate)
    }

    pub fn n_nodes(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn hop_rate(&self) -> f64 {
        self.hop_rate
    }

    pub fn degree(&self, node: usize) -> usize {
        self.edges.iter().filter(|&&(a, b)| a == node || b == node).count()
    }

    /// Quantum-walk Hamiltonian `H = -ν 𝓛`.
    pub fn walk_hamiltonian(&self) -> ComplexMatrix {
        laplacian(self) * C64::new(-self.hop_rate, 0.0)
    }
}

pub(crate) fn cycle_edges(n: usize) -> Vec<(usize, usize)> {
    match n {
        0 | 1 => Vec::new(),
        2 => vec![(0, 1)],
        _ => (0..n).map(|a| (a, (a + 1) % n)).collect(),
    }
}

pub(crate) fn complete_edges(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect()
}

fn normalize_edges(n: usize, edges: impl Iterator<Item = (usize, usize)>) -> Result<Vec<(usize, usize)>> {
    let mut out: Vec<(usize, usize)> = Vec::new();
    for (a, b) in edges {
        if a == b {
            return Err(Error::Precondition(format!("self-loop on node {a}")));
        }
        if a >= n || b >= n {
            return Err(Error::Precondition(format!("edge ({a}, {b}) outside {n} nodes")));
        }
        let e = (a.min(b), a.max(b));
        if out.contains(&e) {
            return Err(Error::Precondition(format!("duplicate edge ({}, {})", e.0, e.1)));
        }
        out.push(e);
    }
    Ok(out)
}

/// Graph Laplacian `𝓛 = Σ d_a|a⟩⟨a| - Σ_{⟨a,b⟩}(|a⟩⟨b| + |b⟩⟨a|)`.
pub fn laplacian(graph: &Graph) -> ComplexMatrix {
    let mut l = ComplexMatrix::zeros(graph.n, graph.n);
    for &(a, b) in &graph.edges {
        l[(a, a)] += ONE;
        l[(b, b)] += ONE;
        l[(a, b)] -= ONE;
        l[(b, a)] -= ONE;
    }
    l
}

/// `|⟨b| exp(-iHt) |a⟩|²` for the walk Hamiltonian `H = -ν𝓛`.
pub fn qw_probability(graph: &Graph, from: usize, to: usize, t: f64) -> Result<f64> {
    if from >= graph.n || to >= graph.n {
        return Err(Error::Precondition(format!(
            "node out of range for a {}-node graph",
            graph.n
        )));
    }
    let u = hermitian_expm(&graph.walk_hamiltonian(), t)?;
    Ok(u[(to, from)].norm_sqr())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coupling {
    pub a: usize,
    pub b: usize,
    pub strength: f64,
}

/// Site energies, coupling graph and per-site dephasing rates.
#[derive(Debug, Clone, PartialEq)]
pub struct ExcitonNetwork {
    energies: Vec<f64>,
    couplings: Vec<Coupling>,
    dephasing: Vec<f64>,
}

impl ExcitonNetwork {
    pub fn new(energies: Vec<f64>, couplings: Vec<Coupling>, dephasing: Vec<f64>) -> Result<Self> {
        let n = energies.len();
        if n == 0 {
            return Err(Error::Precondition("network needs at least one site".into()));
        }
        if dephasing.len() != n {
            return Err(Error::Dimension {
                expected: n,
                found: dephasing.len(),
            });
        }
        if let Some(g) = dephasing.iter().find(|g| !(**g >= 0.0 && g.is_finite())) {
            return Err(Error::Precondition(format!("dephasing rate {g} must be finite and >= 0")));
        }
        if energies.iter().chain(couplings.iter().map(|c| &c.strength)).any(|x| !x.is_finite()) {
            return Err(Error::Precondition("non-finite energy or coupling".into()));
        }
        let pairs = normalize_edges(n, couplings.iter().map(|c| (c.a, c.b)))?;
        let couplings = pairs
            .into_iter()
            .zip(&couplings)
            .map(|((a, b), c)| Coupling {
                a,
                b,
                strength: c.strength,
            })
            .collect();
        Ok(ExcitonNetwork {
            energies,
            couplings,
            dephasing,
        })
    }

    /// Ring with uniform coupling `v` and uniform dephasing `gamma`.
    pub fn ring(energies: Vec<f64>, v: f64, gamma: f64) -> Result<Self> {
        let n = energies.len();
        let couplings = uniform(cycle_edges(n), v);
        Self::new(energies, couplings, vec![gamma; n])
    }

    pub fn complete(energies: Vec<f64>, v: f64, gamma: f64) -> Result<Self> {
        let n = energies.len();
        Self::new(energies, uniform(complete_edges(n), v), vec![gamma; n])
    }

    pub fn n_sites(&self) -> usize {
        self.energies.len()
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn couplings(&self) -> &[Coupling] {
        &self.couplings
    }

    pub fn dephasing(&self) -> &[f64] {
        &self.dephasing
    }

    /// Same network with every site dephasing at `gamma`.
    pub fn with_uniform_dephasing(&self, gamma: f64) -> Result<Self> {
        self.with_dephasing(vec![gamma; self.n_sites()])
    }

    pub fn with_dephasing(&self, dephasing: Vec<f64>) -> Result<Self> {
        Self::new(self.energies.clone(), self.couplings.clone(), dephasing)
    }

    pub(crate) fn check_site(&self, site: usize) -> Result<()> {
        if site >= self.n_sites() {
            return Err(Error::Precondition(format!(
                "site {site} outside a {}-site network",
                self.n_sites()
            )));
        }
        Ok(())
    }
}

fn uniform(edges: Vec<(usize, usize)>, v: f64) -> Vec<Coupling> {
    edges
        .into_iter()
        .map(|(a, b)| Coupling { a, b, strength: v })
        .collect()
}

/// Site-basis Hamiltonian: `ε_j` on the diagonal, `V_{jj'}` on coupled pairs.
pub fn site_hamiltonian(network: &ExcitonNetwork) -> ComplexMatrix {
    let mut h = real_diagonal(&network.energies);
    for c in &network.couplings {
        h[(c.a, c.b)] += C64::new(c.strength, 0.0);
        h[(c.b, c.a)] += C64::new(c.strength, 0.0);
    }
    h
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Pauli {
    X,
    Y,
    Z,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PauliTerm {
    pub coefficient: f64,
    pub factors: Vec<(usize, Pauli)>,
}

impl PauliTerm {
    pub fn new(coefficient: f64, factors: Vec<(usize, Pauli)>) -> Result<Self> {
        for (i, (q, _)) in factors.iter().enumerate() {
            if factors[..i].iter().any(|(p, _)| p == q) {
                return Err(Error::Precondition(format!("qubit {q} repeated in a Pauli term")));
            }
        }
        Ok(PauliTerm {
            coefficient,
            factors,
        })
    }
}

/// Qubit Hamiltonian under the physical mapping:
/// `-Σ ε_j/2 Z_j + Σ V_{jj'}/2 (X_j X_j' + Y_j Y_j')`.
///
/// Zero-coefficient terms are kept so term counts depend only on topology.
pub fn qubit_hamiltonian(network: &ExcitonNetwork) -> Vec<PauliTerm> {
    let mut terms: Vec<PauliTerm> = network
        .energies
        .iter()
        .enumerate()
        .map(|(j, &e)| PauliTerm {
            coefficient: -e / 2.0,
            factors: vec![(j, Pauli::Z)],
        })
        .collect();
    for c in &network.couplings {
        for p in [Pauli::X, Pauli::Y] {
            terms.push(PauliTerm {
                coefficient: c.strength / 2.0,
                factors: vec![(c.a, p), (c.b, p)],
            });
        }
    }
    terms
}

/// Dense matrix of a Pauli sum on `n_qubits` qubits.
pub fn pauli_sum_matrix(terms: &[PauliTerm], n_qubits: usize) -> Result<ComplexMatrix> {
    let dim = 1usize << n_qubits;
    let mut h = ComplexMatrix::zeros(dim, dim);
    for term in terms {
        if term.coefficient == 0.0 {
            continue;
        }
        let mut flip = 0usize;
        for &(q, p) in &term.factors {
            if q >= n_qubits {
                return Err(Error::Precondition(format!("Pauli factor on qubit {q} of {n_qubits}")));
            }
            if p != Pauli::Z {
                flip |= 1 << (n_qubits - 1 - q);
            }
        }
        for k in 0..dim {
            let mut phase = C64::new(term.coefficient, 0.0);
            for &(q, p) in &term.factors {
                let bit = (k >> (n_qubits - 1 - q)) & 1;
                phase *= match (p, bit) {
                    (Pauli::X, _) => ONE,
                    (Pauli::Y, 0) => C64::new(0.0, 1.0),
                    (Pauli::Y, _) => C64::new(0.0, -1.0),
                    (Pauli::Z, 0) => ONE,
                    (Pauli::Z, _) => -ONE,
                };
            }
            h[(k ^ flip, k)] += phase;
        }
    }
    Ok(h)
}

/// Matrix of [`qubit_hamiltonian`] on the `N`-qubit register.
pub fn qubit_hamiltonian_matrix(network: &ExcitonNetwork) -> Result<ComplexMatrix> {
    pauli_sum_matrix(&qubit_hamiltonian(network), network.n_sites())
}

/// Register encoding of the network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MappingKind {
    /// One qubit per site; site `j` is the Hamming-weight-one state with qubit `j` excited.
    Physical,
    /// Site index stored in binary on `⌈log2 N⌉` qubits.
    Algorithmic,
}

impl MappingKind {
    pub fn n_qubits(self, n_sites: usize) -> usize {
        match self {
            MappingKind::Physical => n_sites,
            MappingKind::Algorithmic => algorithmic_qubits(n_sites),
        }
    }

    pub fn encode(self, site: usize, n_sites: usize) -> Result<usize> {
        match self {
            MappingKind::Physical => encode_physical(site, n_sites),
            MappingKind::Algorithmic => encode_algorithmic(site, n_sites),
        }
    }
}

/// `⌈log2 N⌉`.
pub fn algorithmic_qubits(n_sites: usize) -> usize {
    n_sites.max(1).next_power_of_two().trailing_zeros() as usize
}

fn check_site(site: usize, n_sites: usize) -> Result<()> {
    if site >= n_sites {
        return Err(Error::Precondition(format!("site {site} outside {n_sites} sites")));
    }
    Ok(())
}

/// Basis index `2^(N-1-site)` of the single-excitation state on `site`.
pub fn encode_physical(site: usize, n_sites: usize) -> Result<usize> {
    check_site(site, n_sites)?;
    Ok(1 << (n_sites - 1 - site))
}

pub fn encode_algorithmic(site: usize, n_sites: usize) -> Result<usize> {
    check_site(site, n_sites)?;
    Ok(site)
}

pub fn decode_algorithmic(index: usize, n_sites: usize) -> Result<usize> {
    check_site(index, n_sites)?;
    Ok(index)
}

/// Restriction of a `2^N` operator to the single-exciton basis `{encode_physical(j)}`.
pub fn single_exciton_block(op: &ComplexMatrix, n_sites: usize) -> ComplexMatrix {
    let idx: Vec<usize> = (0..n_sites).map(|j| 1 << (n_sites - 1 - j)).collect();
    ComplexMatrix::from_fn(n_sites, n_sites, |r, c| op[(idx[r], idx[c])])
}

/// Embeds an `N×N` site operator into the single-exciton block of `2^N`.
pub fn embed_single_exciton(op: &ComplexMatrix, n_sites: usize) -> ComplexMatrix {
    let dim = 1 << n_sites;
    let mut out = ComplexMatrix::from_element(dim, dim, ZERO);
    let idx: Vec<usize> = (0..n_sites).map(|j| 1 << (n_sites - 1 - j)).collect();
    for r in 0..n_sites {
        for c in 0..n_sites {
            out[(idx[r], idx[c])] = op[(r, c)];
        }
    }
    out
}

/// `N` independent draws from `Normal(0, σ²)`.
pub fn sample_static_disorder<R: Rng + ?Sized>(n_sites: usize, sigma: f64, rng: &mut R) -> Result<Vec<f64>> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::Precondition(format!("disorder width {sigma} must be >= 0")));
    }
    if sigma == 0.0 {
        return Ok(vec![0.0; n_sites]);
    }
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::Numeric(e.to_string()))?;
    Ok((0..n_sites).map(|_| normal.sample(rng)).collect())
}

/// Reference scenario: the disordered four-site ring used throughout the
/// examples and acceptance tests.
pub mod fixtures {
    use super::*;

    /// Site energies (units of V) of the reference disorder realization,
    /// drawn once from a Gaussian of width 2V.
    pub const DISORDERED_RING_ENERGIES: [f64; 4] = [0.44, 0.24, -3.22, 0.36];

    /// Four-site ring, `V = 1`, uniform dephasing `gamma`.
    pub fn disordered_ring(gamma: f64) -> ExcitonNetwork {
        ExcitonNetwork::ring(DISORDERED_RING_ENERGIES.to_vec(), 1.0, gamma)
            .expect("fixture network is valid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::matrix::{commutator, max_abs, max_abs_diff, hermitian_eigen};
    use crate::quantum::rng::RandomStream;
    use proptest::prelude::*;
    use rand::Rng;

    fn random_network(rng: &mut RandomStream, n: usize) -> ExcitonNetwork {
        let energies = (0..n).map(|_| rng.random::<f64>() * 4.0 - 2.0).collect();
        let mut couplings = Vec::new();
        for (a, b) in complete_edges(n) {
            if rng.random::<f64>() < 0.6 {
                couplings.push(Coupling { a, b, strength: rng.random::<f64>() * 2.0 - 1.0 });
            }
        }
        let gammas = (0..n).map(|_| rng.random::<f64>()).collect();
        ExcitonNetwork::new(energies, couplings, gammas).unwrap()
    }

    #[test]
    fn laplacian_examples() {
        let l = laplacian(&Graph::cycle(4, 1.0).unwrap());
        for a in 0..4 {
            assert_eq!(l[(a, a)].re, 2.0);
            assert_eq!(l[(a, (a + 1) % 4)].re, -1.0);
            assert_eq!(l[((a + 1) % 4, a)].re, -1.0);
            assert_eq!(l[(a, (a + 2) % 4)].re, 0.0);
        }
        let l2 = laplacian(&Graph::path(2, 1.0).unwrap());
        assert_eq!(l2.map(|z| z.re).as_slice(), &[1.0, -1.0, -1.0, 1.0]);
        let k3 = laplacian(&Graph::complete(3, 1.0).unwrap());
        for r in 0..3 {
            for c in 0..3 {
                assert_eq!(k3[(r, c)].re, if r == c { 2.0 } else { -1.0 });
            }
        }
    }

    #[test]
    fn graph_rejects_bad_edges() {
        assert!(Graph::new(3, vec![(0, 0)], 1.0).is_err());
        assert!(Graph::new(3, vec![(0, 1), (1, 0)], 1.0).is_err());
        assert!(Graph::new(3, vec![(0, 3)], 1.0).is_err());
        assert!(Graph::new(3, vec![], 0.0).is_err());
    }

    #[test]
    fn walk_probabilities() {
        let g = Graph::cycle(5, 0.7).unwrap();
        for b in 0..5 {
            let p = qw_probability(&g, 2, b, 0.0).unwrap();
            assert!((p - if b == 2 { 1.0 } else { 0.0 }).abs() < 1e-15);
        }
        // two nodes: eigenvalues 0 and -2ν, transfer probability sin²(νt)
        let g2 = Graph::path(2, 1.0).unwrap();
        for &t in &[0.1, 0.5, 1.3, 2.9] {
            let p: f64 = qw_probability(&g2, 0, 1, t).unwrap();
            assert!((p - t.sin().powi(2)).abs() < 1e-12);
        }
        let mut rng = RandomStream::new(3, &[]);
        for _ in 0..20 {
            let t = rng.random::<f64>() * 10.0;
            let total: f64 = (0..5).map(|b| qw_probability(&g, 0, b, t).unwrap()).sum();
            assert!((total - 1.0).abs() < 1e-10);
        }
        assert!(qw_probability(&g, 0, 5, 1.0).is_err());
    }

    #[test]
    fn laplacian_is_psd_with_zero_row_sums() {
        let mut rng = RandomStream::new(4, &[]);
        for _ in 0..100 {
            let n = 2 + (rng.random::<u32>() % 7) as usize;
            let edges = complete_edges(n).into_iter().filter(|_| rng.random::<f64>() < 0.5).collect();
            let l = laplacian(&Graph::new(n, edges, 1.0).unwrap());
            for r in 0..n {
                let s: C64 = l.row(r).iter().sum();
                assert!(s.norm() < 1e-15);
            }
            let (vals, _) = hermitian_eigen(&l).unwrap();
            assert!(vals.iter().all(|&v| v >= -1e-10));
        }
    }

    #[test]
    fn regular_graph_hamiltonian_equals_walk() {
        let nu = 0.8;
        let g = Graph::cycle(6, nu).unwrap();
        let d = 2.0;
        let net = ExcitonNetwork::new(
            vec![-nu * d; 6],
            uniform(cycle_edges(6), nu),
            vec![0.0; 6],
        )
        .unwrap();
        assert!(max_abs_diff(&site_hamiltonian(&net), &g.walk_hamiltonian()) <= 1e-14);
    }

    #[test]
    fn site_hamiltonian_examples() {
        let h = site_hamiltonian(&fixtures::disordered_ring(0.1));
        let diag: Vec<f64> = (0..4).map(|k| h[(k, k)].re).collect();
        assert_eq!(diag, vec![0.44, 0.24, -3.22, 0.36]);
        assert_eq!(h[(0, 1)].re, 1.0);
        assert_eq!(h[(3, 0)].re, 1.0);
        assert_eq!(h[(0, 2)].re, 0.0);

        let two = ExcitonNetwork::ring(vec![0.0, 0.0], 1.0, 0.0).unwrap();
        assert_eq!(site_hamiltonian(&two).map(|z| z.re).as_slice(), &[0.0, 1.0, 1.0, 0.0]);

        let isolated = ExcitonNetwork::new(vec![1.0, 2.0, 3.0], vec![], vec![0.0; 3]).unwrap();
        assert!(max_abs_diff(&site_hamiltonian(&isolated), &real_diagonal(&[1.0, 2.0, 3.0])) == 0.0);
    }

    #[test]
    fn qubit_hamiltonian_terms() {
        let net = ExcitonNetwork::ring(vec![1.0, 0.0], 1.0, 0.0).unwrap();
        let terms = qubit_hamiltonian(&net);
        assert_eq!(terms.len(), 4);
        assert_eq!(terms[0], PauliTerm { coefficient: -0.5, factors: vec![(0, Pauli::Z)] });
        assert_eq!(terms[1].coefficient, 0.0);
        assert_eq!(terms[2], PauliTerm { coefficient: 0.5, factors: vec![(0, Pauli::X), (1, Pauli::X)] });
        assert_eq!(terms[3], PauliTerm { coefficient: 0.5, factors: vec![(0, Pauli::Y), (1, Pauli::Y)] });

        let ring = qubit_hamiltonian(&fixtures::disordered_ring(0.1));
        let z: Vec<f64> = ring.iter().filter(|t| t.factors.len() == 1).map(|t| t.coefficient).collect();
        let expected = [-0.22, -0.12, 1.61, -0.18];
        for (a, b) in z.iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
        let pairs: Vec<&PauliTerm> = ring.iter().filter(|t| t.factors.len() == 2).collect();
        assert_eq!(pairs.len(), 8);
        assert!(pairs.iter().all(|t| t.coefficient == 0.5));
    }

    #[test]
    fn pauli_term_rejects_repeated_qubit() {
        assert!(PauliTerm::new(1.0, vec![(0, Pauli::X), (0, Pauli::Z)]).is_err());
    }

    #[test]
    fn pauli_sum_matches_kron_construction() {
        use crate::quantum::gates::{pauli_x, pauli_y, pauli_z};
        use crate::quantum::matrix::kron;
        let id = ComplexMatrix::identity(2, 2);
        let t = PauliTerm::new(0.3, vec![(0, Pauli::Y), (2, Pauli::X)]).unwrap();
        let m = pauli_sum_matrix(&[t], 3).unwrap();
        let k = kron(&kron(&pauli_y(), &id), &pauli_x()) * C64::new(0.3, 0.0);
        assert!(max_abs_diff(&m, &k) < 1e-15);
        let z = pauli_sum_matrix(&[PauliTerm::new(1.0, vec![(1, Pauli::Z)]).unwrap()], 2).unwrap();
        assert!(max_abs_diff(&z, &kron(&id, &pauli_z())) < 1e-15);
    }

    #[test]
    fn encodings() {
        assert_eq!(encode_physical(0, 4).unwrap(), 8);
        assert_eq!(encode_physical(3, 4).unwrap(), 1);
        let idx: Vec<usize> = (0..6).map(|j| encode_physical(j, 6).unwrap()).collect();
        for (k, &i) in idx.iter().enumerate() {
            assert_eq!(i.count_ones(), 1);
            assert!(!idx[..k].contains(&i));
        }
        assert!(encode_physical(4, 4).is_err());
        let alg: Vec<usize> = (0..4).map(|j| encode_algorithmic(j, 4).unwrap()).collect();
        assert_eq!(alg, vec![0, 1, 2, 3]);
        assert_eq!(algorithmic_qubits(4), 2);
        assert_eq!(algorithmic_qubits(5), 3);
        assert_eq!(encode_algorithmic(4, 5).unwrap(), 4);
        for j in 0..5 {
            assert_eq!(decode_algorithmic(encode_algorithmic(j, 5).unwrap(), 5).unwrap(), j);
        }
        assert!(encode_algorithmic(5, 5).is_err());
        assert_eq!(MappingKind::Physical.n_qubits(5), 5);
        assert_eq!(MappingKind::Algorithmic.n_qubits(5), 3);
    }

    #[test]
    fn disorder_sampling() {
        let mut rng = RandomStream::new(5, &[]);
        assert_eq!(sample_static_disorder(4, 0.0, &mut rng).unwrap(), vec![0.0; 4]);
        let draws = sample_static_disorder(1_000_000, 2.0, &mut rng).unwrap();
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        assert!(mean.abs() < 5.0 * 2.0 / 1000.0);
        let a = sample_static_disorder(4, 2.0, &mut RandomStream::new(9, &[])).unwrap();
        let b = sample_static_disorder(4, 2.0, &mut RandomStream::new(9, &[])).unwrap();
        assert_eq!(a, b);
        assert!(sample_static_disorder(4, -1.0, &mut rng).is_err());
    }

    #[test]
    fn network_validation() {
        assert!(ExcitonNetwork::ring(vec![0.0; 3], 1.0, -0.1).is_err());
        assert!(ExcitonNetwork::new(vec![0.0; 2], vec![], vec![0.0]).is_err());
        assert!(ExcitonNetwork::new(
            vec![0.0; 2],
            vec![Coupling { a: 1, b: 1, strength: 1.0 }],
            vec![0.0; 2]
        )
        .is_err());
    }

    #[test]
    fn excitation_number_is_conserved() {
        let mut rng = RandomStream::new(6, &[]);
        for _ in 0..10 {
            let net = random_network(&mut rng, 4);
            let h = qubit_hamiltonian_matrix(&net).unwrap();
            let number = real_diagonal(&(0..16).map(|k: usize| k.count_ones() as f64).collect::<Vec<_>>());
            assert!(max_abs(&commutator(&h, &number)) <= 1e-12);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(50))]
        #[test]
        fn single_exciton_restriction(seed in any::<u64>(), n in 1usize..6) {
            let mut rng = RandomStream::new(seed, &[]);
            let net = random_network(&mut rng, n);
            let h = qubit_hamiltonian_matrix(&net).unwrap();
            let block = single_exciton_block(&h, n);
            let e0 = -0.5 * net.energies().iter().sum::<f64>();
            let expected = site_hamiltonian(&net) + ComplexMatrix::identity(n, n) * C64::new(e0, 0.0);
            prop_assert!(max_abs_diff(&block, &expected) <= 1e-12);
        }
    }
}
