//! Statevector and density-matrix states over a qubit register.
//!
//! Qubit `0` is the most significant bit of the basis index, so on an
//! `n`-qubit register qubit `q` sits at bit position `n - 1 - q`.

use rand::Rng;
use rand_distr::{Binomial, Distribution};

use super::matrix::{
    hermiticity_error, max_abs_diff, ComplexMatrix, ComplexVector, C64, ZERO,
};
use crate::error::{Error, Result};

const NORM_TOL: f64 = 1e-10;
const CLIP_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BasisLayout {
    n_qubits: usize,
}

impl BasisLayout {
    pub fn new(n_qubits: usize) -> Self {
        BasisLayout { n_qubits }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    /// Bit mask selecting `qubit` in a basis index.
    pub fn mask(&self, qubit: usize) -> usize {
        1 << (self.n_qubits - 1 - qubit)
    }

    pub fn check_qubit(&self, qubit: usize) -> Result<()> {
        if qubit >= self.n_qubits {
            return Err(Error::Precondition(format!(
                "qubit {qubit} outside a {}-qubit register",
                self.n_qubits
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StateData {
    Statevector(ComplexVector),
    Density(ComplexMatrix),
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    layout: BasisLayout,
    data: StateData,
}

impl QuantumState {
    /// Computational basis state `|index⟩`.
    pub fn basis(layout: BasisLayout, index: usize) -> Result<Self> {
        if index >= layout.dim() {
            return Err(Error::Precondition(format!(
                "basis index {index} outside dimension {}",
                layout.dim()
            )));
        }
        let mut v = ComplexVector::zeros(layout.dim());
        v[index] = C64::new(1.0, 0.0);
        Ok(QuantumState {
            layout,
            data: StateData::Statevector(v),
        })
    }

    pub fn from_amplitudes(layout: BasisLayout, amplitudes: ComplexVector) -> Result<Self> {
        check_len(layout.dim(), amplitudes.len())?;
        let norm = amplitudes.norm_squared();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::Precondition(format!("statevector norm² {norm} != 1")));
        }
        Ok(QuantumState {
            layout,
            data: StateData::Statevector(amplitudes),
        })
    }

    pub fn from_density(layout: BasisLayout, rho: ComplexMatrix) -> Result<Self> {
        check_len(layout.dim(), rho.nrows())?;
        check_len(layout.dim(), rho.ncols())?;
        if hermiticity_error(&rho) > NORM_TOL {
            return Err(Error::Precondition("density matrix is not Hermitian".into()));
        }
        let trace = rho.trace();
        if (trace.re - 1.0).abs() > NORM_TOL || trace.im.abs() > NORM_TOL {
            return Err(Error::Precondition(format!("density trace {trace} != 1")));
        }
        Ok(QuantumState {
            layout,
            data: StateData::Density(rho),
        })
    }

    pub fn layout(&self) -> BasisLayout {
        self.layout
    }

    pub fn data(&self) -> &StateData {
        &self.data
    }

    pub fn is_density(&self) -> bool {
        matches!(self.data, StateData::Density(_))
    }

    pub fn amplitudes(&self) -> Option<&ComplexVector> {
        match &self.data {
            StateData::Statevector(v) => Some(v),
            StateData::Density(_) => None,
        }
    }

    pub fn density(&self) -> Option<&ComplexMatrix> {
        match &self.data {
            StateData::Density(m) => Some(m),
            StateData::Statevector(_) => None,
        }
    }

    /// `|ψ⟩⟨ψ|` for a statevector, a clone for a density matrix.
    pub fn to_density(&self) -> ComplexMatrix {
        match &self.data {
            StateData::Statevector(v) => v * v.adjoint(),
            StateData::Density(m) => m.clone(),
        }
    }

    /// Squared norm (statevector) or real trace (density).
    pub fn norm(&self) -> f64 {
        match &self.data {
            StateData::Statevector(v) => v.norm_squared(),
            StateData::Density(m) => m.trace().re,
        }
    }

    /// Applies `u` to the listed target qubits (identity elsewhere).
    pub fn apply_unitary(&self, u: &ComplexMatrix, targets: &[usize]) -> Result<QuantumState> {
        check_targets(self.layout, u, targets)?;
        let n = self.layout.n_qubits;
        let data = match &self.data {
            StateData::Statevector(v) => {
                let mut out = v.clone();
                apply_to_amplitudes(out.as_mut_slice(), n, u, targets);
                StateData::Statevector(out)
            }
            StateData::Density(rho) => StateData::Density(conjugate_by(rho, n, u, targets)),
        };
        Ok(QuantumState {
            layout: self.layout,
            data,
        })
    }

    /// Born-rule probabilities of the computational basis states.
    pub fn basis_probabilities(&self) -> Result<Vec<f64>> {
        let raw: Vec<f64> = match &self.data {
            StateData::Statevector(v) => v.iter().map(|z| z.norm_sqr()).collect(),
            StateData::Density(m) => (0..m.nrows()).map(|k| m[(k, k)].re).collect(),
        };
        clip_probabilities(raw)
    }

    /// Probability that `qubit` reads 1.
    pub fn excited_probability(&self, qubit: usize) -> Result<f64> {
        self.layout.check_qubit(qubit)?;
        let mask = self.layout.mask(qubit);
        let p = match &self.data {
            StateData::Statevector(v) => excited_probability(v.as_slice(), mask),
            StateData::Density(m) => (0..m.nrows())
                .filter(|k| k & mask != 0)
                .map(|k| m[(k, k)].re)
                .sum(),
        };
        Ok(p)
    }

    /// Measures `qubit` in the computational basis, collapses the state and
    /// returns the qubit to `|0⟩`.
    pub fn measure_and_reset<R: Rng + ?Sized>(
        &self,
        qubit: usize,
        rng: &mut R,
    ) -> Result<(QuantumState, u8)> {
        self.layout.check_qubit(qubit)?;
        let StateData::Statevector(v) = &self.data else {
            return Err(Error::Precondition(
                "measure_and_reset needs a statevector; trace the qubit out of a density matrix instead"
                    .into(),
            ));
        };
        let mut out = v.clone();
        let bit = measure_reset_amplitudes(out.as_mut_slice(), self.layout.mask(qubit), rng)?;
        Ok((
            QuantumState {
                layout: self.layout,
                data: StateData::Statevector(out),
            },
            bit,
        ))
    }

    /// Partial trace over one qubit of a density matrix.
    pub fn trace_out(&self, qubit: usize) -> Result<QuantumState> {
        self.layout.check_qubit(qubit)?;
        let StateData::Density(rho) = &self.data else {
            return Err(Error::Precondition("partial trace needs a density matrix".into()));
        };
        Ok(QuantumState {
            layout: BasisLayout::new(self.layout.n_qubits - 1),
            data: StateData::Density(partial_trace_qubit(rho, self.layout.n_qubits, qubit)),
        })
    }

    /// Largest entrywise difference to another state of the same kind.
    pub fn distance(&self, other: &QuantumState) -> f64 {
        match (&self.data, &other.data) {
            (StateData::Statevector(a), StateData::Statevector(b)) => a
                .iter()
                .zip(b.iter())
                .fold(0.0, |acc, (x, y)| acc.max((x - y).norm())),
            _ => max_abs_diff(&self.to_density(), &other.to_density()),
        }
    }
}

fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::Dimension { expected, found });
    }
    Ok(())
}

fn check_targets(layout: BasisLayout, u: &ComplexMatrix, targets: &[usize]) -> Result<()> {
    check_len(1 << targets.len(), u.nrows())?;
    check_len(u.nrows(), u.ncols())?;
    for (i, &t) in targets.iter().enumerate() {
        layout.check_qubit(t)?;
        if targets[..i].contains(&t) {
            return Err(Error::Precondition(format!("duplicate target qubit {t}")));
        }
    }
    Ok(())
}

/// Applies `u` on `targets` to a raw amplitude buffer of an `n`-qubit register.
pub fn apply_to_amplitudes(amps: &mut [C64], n: usize, u: &ComplexMatrix, targets: &[usize]) {
    let k = targets.len();
    let sub = 1usize << k;
    let masks: Vec<usize> = targets.iter().map(|&t| 1 << (n - 1 - t)).collect();
    let all: usize = masks.iter().sum();
    let offsets: Vec<usize> = (0..sub)
        .map(|s| {
            (0..k)
                .filter(|&b| s & (1 << (k - 1 - b)) != 0)
                .map(|b| masks[b])
                .sum()
        })
        .collect();
    let mut gathered = vec![ZERO; sub];
    for base in 0..amps.len() {
        if base & all != 0 {
            continue;
        }
        for (g, &off) in gathered.iter_mut().zip(&offsets) {
            *g = amps[base + off];
        }
        for (r, &off) in offsets.iter().enumerate() {
            let mut acc = ZERO;
            for (c, g) in gathered.iter().enumerate() {
                acc += u[(r, c)] * g;
            }
            amps[base + off] = acc;
        }
    }
}

/// `U ρ U†` with `U` acting on `targets`.
pub fn conjugate_by(rho: &ComplexMatrix, n: usize, u: &ComplexMatrix, targets: &[usize]) -> ComplexMatrix {
    let dim = rho.nrows();
    let mut left = rho.clone();
    for c in 0..dim {
        let mut col: Vec<C64> = left.column(c).iter().copied().collect();
        apply_to_amplitudes(&mut col, n, u, targets);
        left.set_column(c, &ComplexVector::from_vec(col));
    }
    // (U (Uρ)†)† = U ρ U†
    let mut right = left.adjoint();
    for c in 0..dim {
        let mut col: Vec<C64> = right.column(c).iter().copied().collect();
        apply_to_amplitudes(&mut col, n, u, targets);
        right.set_column(c, &ComplexVector::from_vec(col));
    }
    right.adjoint()
}

pub(crate) fn excited_probability(amps: &[C64], mask: usize) -> f64 {
    amps.iter()
        .enumerate()
        .filter(|(k, _)| k & mask != 0)
        .map(|(_, z)| z.norm_sqr())
        .sum()
}

/// In-place measure-and-reset on a raw buffer. Returns the outcome bit.
pub(crate) fn measure_reset_amplitudes<R: Rng + ?Sized>(
    amps: &mut [C64],
    mask: usize,
    rng: &mut R,
) -> Result<u8> {
    let p1 = excited_probability(amps, mask);
    let total: f64 = amps.iter().map(|z| z.norm_sqr()).sum();
    let p1 = (p1 / total).clamp(0.0, 1.0);
    let u: f64 = rng.random();
    let bit = u8::from(u < p1);
    let keep = if bit == 1 { p1 } else { 1.0 - p1 };
    if keep <= 0.0 {
        return Err(Error::Numeric("measurement outcome with zero probability".into()));
    }
    let scale = 1.0 / (keep * total).sqrt();
    for k in 0..amps.len() {
        if k & mask != 0 {
            continue;
        }
        let one = k | mask;
        if bit == 1 {
            amps[k] = amps[one] * scale;
        } else {
            amps[k] *= scale;
        }
        amps[one] = ZERO;
    }
    Ok(bit)
}

/// Partial trace over `qubit` of an operator on `n` qubits.
pub fn partial_trace_qubit(rho: &ComplexMatrix, n: usize, qubit: usize) -> ComplexMatrix {
    let pos = n - 1 - qubit;
    let low = (1usize << pos) - 1;
    let out_dim = rho.nrows() / 2;
    // Inserts a bit at `pos` into a reduced index.
    let expand = |r: usize, bit: usize| ((r & !low) << 1) | (bit << pos) | (r & low);
    ComplexMatrix::from_fn(out_dim, out_dim, |r, c| {
        rho[(expand(r, 0), expand(c, 0))] + rho[(expand(r, 1), expand(c, 1))]
    })
}

fn clip_probabilities(mut raw: Vec<f64>) -> Result<Vec<f64>> {
    for p in raw.iter_mut() {
        if *p < 0.0 {
            if *p < -CLIP_TOL {
                return Err(Error::Numeric(format!("negative probability {p}")));
            }
            *p = 0.0;
        }
    }
    Ok(raw)
}

/// Multinomial sample of `shots` outcomes from `probs`.
pub fn sample_shots<R: Rng + ?Sized>(probs: &[f64], shots: u64, rng: &mut R) -> Result<Vec<u64>> {
    if shots == 0 {
        return Err(Error::EmptySample);
    }
    if probs.is_empty() {
        return Err(Error::Empty("probability vector"));
    }
    let probs = clip_probabilities(probs.to_vec())?;
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > 1e-8 {
        return Err(Error::Precondition(format!("probabilities sum to {total}, not 1")));
    }
    let mut counts = vec![0u64; probs.len()];
    let mut remaining = shots;
    let mut mass = 1.0;
    for (k, &p) in probs.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if k + 1 == probs.len() || mass <= 0.0 {
            counts[k] = remaining;
            break;
        }
        let q = (p / mass).clamp(0.0, 1.0);
        let draw = Binomial::new(remaining, q)
            .map_err(|e| Error::Numeric(format!("binomial sampler: {e}")))?
            .sample(rng);
        counts[k] = draw;
        remaining -= draw;
        mass -= p;
    }
    Ok(counts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::gates;
    use crate::quantum::rng::RandomStream;
    use crate::quantum::matrix::{hermitian_expm, kron, ONE};
    use proptest::prelude::*;
    use rand::Rng;

    fn random_state(n: usize, rng: &mut RandomStream) -> QuantumState {
        let d = 1 << n;
        let v = ComplexVector::from_fn(d, |_, _| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        let v = &v / C64::new(v.norm(), 0.0);
        QuantumState::from_amplitudes(BasisLayout::new(n), v).unwrap()
    }

    fn random_density(n: usize, rng: &mut RandomStream) -> ComplexMatrix {
        let d = 1 << n;
        let a = ComplexMatrix::from_fn(d, d, |_, _| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        let rho = &a * a.adjoint();
        let tr = rho.trace();
        rho / tr
    }

    fn random_unitary(k: usize, rng: &mut RandomStream) -> ComplexMatrix {
        let d = 1 << k;
        let a = ComplexMatrix::from_fn(d, d, |_, _| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        let h = (&a + a.adjoint()) * C64::new(0.5, 0.0);
        hermitian_expm(&h, 1.0).unwrap()
    }

    #[test]
    fn x_on_first_qubit_sets_msb() {
        let s = QuantumState::basis(BasisLayout::new(4), 0).unwrap();
        let out = s.apply_unitary(&gates::pauli_x(), &[0]).unwrap();
        assert_eq!(out.basis_probabilities().unwrap()[8], 1.0);
    }

    #[test]
    fn identity_gate_is_noop() {
        let mut rng = RandomStream::new(1, &[]);
        let s = random_state(3, &mut rng);
        let out = s.apply_unitary(&gates::identity(2), &[2, 0]).unwrap();
        assert!(s.distance(&out) <= 1e-15);
    }

    #[test]
    fn inverse_rzx_pair_restores_state() {
        let mut rng = RandomStream::new(2, &[]);
        let s = random_state(3, &mut rng);
        let out = s
            .apply_unitary(&gates::rzx(0.37), &[1, 2])
            .unwrap()
            .apply_unitary(&gates::rzx(-0.37), &[1, 2])
            .unwrap();
        assert!(s.distance(&out) <= 1e-12);
    }

    #[test]
    fn target_ordering_matches_kron() {
        let mut rng = RandomStream::new(3, &[]);
        let s = random_state(2, &mut rng);
        let u = kron(&gates::pauli_z(), &gates::pauli_x());
        let direct = &u * s.amplitudes().unwrap();
        let out = s.apply_unitary(&gates::rzx(std::f64::consts::PI), &[0, 1]).unwrap();
        // RZX(π) = -i Z⊗X
        let expected = direct * C64::new(0.0, -1.0);
        let diff = (out.amplitudes().unwrap() - expected).norm();
        assert!(diff < 1e-14);
        // swapped targets act as X⊗Z
        let swapped = s.apply_unitary(&u, &[1, 0]).unwrap();
        let xz = kron(&gates::pauli_x(), &gates::pauli_z()) * s.amplitudes().unwrap();
        assert!((swapped.amplitudes().unwrap() - xz).norm() < 1e-14);
    }

    #[test]
    fn rejects_bad_targets() {
        let s = QuantumState::basis(BasisLayout::new(3), 0).unwrap();
        assert!(matches!(s.apply_unitary(&gates::rxx(0.1), &[1, 1]), Err(Error::Precondition(_))));
        assert!(matches!(s.apply_unitary(&gates::rxx(0.1), &[1]), Err(Error::Dimension { .. })));
        assert!(s.apply_unitary(&gates::pauli_x(), &[3]).is_err());
    }

    #[test]
    fn density_conjugation_matches_dense_product() {
        let mut rng = RandomStream::new(4, &[]);
        let rho = random_density(3, &mut rng);
        let s = QuantumState::from_density(BasisLayout::new(3), rho.clone()).unwrap();
        let u = random_unitary(2, &mut rng);
        let out = s.apply_unitary(&u, &[0, 2]).unwrap();
        let vector_route: ComplexMatrix = {
            let mut cols = Vec::new();
            for c in 0..8 {
                let e = QuantumState::basis(BasisLayout::new(3), c).unwrap();
                cols.push(e.apply_unitary(&u, &[0, 2]).unwrap().amplitudes().unwrap().clone());
            }
            ComplexMatrix::from_columns(&cols)
        };
        let expected = &vector_route * rho * vector_route.adjoint();
        assert!(max_abs_diff(out.density().unwrap(), &expected) < 1e-13);
    }

    #[test]
    fn probabilities_of_simple_states() {
        let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let plus = QuantumState::from_amplitudes(BasisLayout::new(1), ComplexVector::from_vec(vec![h, h])).unwrap();
        let p = plus.basis_probabilities().unwrap();
        assert!((p[0] - 0.5).abs() < 1e-15 && (p[1] - 0.5).abs() < 1e-15);
        let basis = QuantumState::basis(BasisLayout::new(2), 2).unwrap();
        assert_eq!(basis.basis_probabilities().unwrap(), vec![0.0, 0.0, 1.0, 0.0]);
        let mixed = QuantumState::from_density(
            BasisLayout::new(2),
            ComplexMatrix::identity(4, 4) * C64::new(0.25, 0.0),
        )
        .unwrap();
        assert_eq!(mixed.basis_probabilities().unwrap(), vec![0.25; 4]);
    }

    #[test]
    fn shots_from_degenerate_distribution() {
        let mut rng = RandomStream::new(5, &[]);
        assert_eq!(sample_shots(&[1.0, 0.0], 100, &mut rng).unwrap(), vec![100, 0]);
        assert!(matches!(sample_shots(&[1.0], 0, &mut rng), Err(Error::EmptySample)));
        assert!(sample_shots(&[0.7, 0.7], 10, &mut rng).is_err());
    }

    #[test]
    fn shots_concentrate_and_are_deterministic() {
        let mut rng = RandomStream::new(6, &[]);
        let counts = sample_shots(&[0.5, 0.5], 1_000_000, &mut rng).unwrap();
        assert_eq!(counts.iter().sum::<u64>(), 1_000_000);
        let sigma = 250_000f64.sqrt();
        assert!((counts[0] as f64 - 500_000.0).abs() <= 5.0 * sigma);
        let again = sample_shots(&[0.5, 0.5], 1_000_000, &mut RandomStream::new(6, &[])).unwrap();
        assert_eq!(counts, again);
    }

    #[test]
    fn reset_of_ground_qubit_is_noop() {
        let mut rng = RandomStream::new(7, &[]);
        let s = random_state(2, &mut rng)
            .apply_unitary(&gates::identity(1), &[0])
            .unwrap();
        // Product with |0⟩ on a third qubit: embed by building a 3-qubit state.
        let mut v = ComplexVector::zeros(8);
        for k in 0..4 {
            v[k << 1] = s.amplitudes().unwrap()[k];
        }
        let full = QuantumState::from_amplitudes(BasisLayout::new(3), v).unwrap();
        for _ in 0..20 {
            let (out, bit) = full.measure_and_reset(2, &mut rng).unwrap();
            assert_eq!(bit, 0);
            assert!(out.distance(&full) < 1e-15);
        }
    }

    #[test]
    fn reset_selects_branch() {
        // c0 |ψ0⟩|0⟩ + c1 |ψ1⟩|1⟩ with |ψ0⟩ = |0⟩, |ψ1⟩ = |1⟩ on the system.
        let (c0, c1) = (0.6, 0.8);
        let v = ComplexVector::from_vec(vec![
            C64::new(c0, 0.0),
            ZERO,
            ZERO,
            C64::new(c1, 0.0),
        ]);
        let s = QuantumState::from_amplitudes(BasisLayout::new(2), v).unwrap();
        let mut rng = RandomStream::new(8, &[]);
        let mut ones = 0;
        let trials = 20_000;
        for _ in 0..trials {
            let (out, bit) = s.measure_and_reset(1, &mut rng).unwrap();
            let p = out.basis_probabilities().unwrap();
            if bit == 1 {
                ones += 1;
                assert!((p[2] - 1.0).abs() < 1e-12);
            } else {
                assert!((p[0] - 1.0).abs() < 1e-12);
            }
            assert!((out.norm() - 1.0).abs() < 1e-10);
        }
        let f = ones as f64 / trials as f64;
        let sigma = (0.64 * 0.36 / trials as f64).sqrt();
        assert!((f - 0.64).abs() < 5.0 * sigma);
    }

    #[test]
    fn reset_after_rzx_flips_with_sine_squared() {
        let cdt: f64 = 0.2;
        let mut rng = RandomStream::new(9, &[]);
        let sys = random_state(1, &mut rng);
        let mut v = ComplexVector::zeros(4);
        v[0] = sys.amplitudes().unwrap()[0];
        v[2] = sys.amplitudes().unwrap()[1];
        let s = QuantumState::from_amplitudes(BasisLayout::new(2), v)
            .unwrap()
            .apply_unitary(&gates::rzx(2.0 * cdt), &[0, 1])
            .unwrap();
        let trials = 100_000;
        let ones: usize = (0..trials)
            .map(|_| s.measure_and_reset(1, &mut rng).unwrap().1 as usize)
            .sum();
        let p = cdt.sin().powi(2);
        let sigma = (p * (1.0 - p) / trials as f64).sqrt();
        assert!((ones as f64 / trials as f64 - p).abs() < 5.0 * sigma);
    }

    #[test]
    fn born_frequencies_match_marginals() {
        let mut rng = RandomStream::new(10, &[]);
        let s = random_state(3, &mut rng);
        let p1 = s.excited_probability(1).unwrap();
        let trials = 100_000;
        let ones: usize = (0..trials)
            .map(|_| s.measure_and_reset(1, &mut rng).unwrap().1 as usize)
            .sum();
        let sigma = (p1 * (1.0 - p1) / trials as f64).sqrt();
        assert!((ones as f64 / trials as f64 - p1).abs() < 5.0 * sigma);
    }

    #[test]
    fn reset_rejects_density() {
        let s = QuantumState::from_density(BasisLayout::new(1), ComplexMatrix::identity(2, 2) * C64::new(0.5, 0.0)).unwrap();
        let mut rng = RandomStream::new(11, &[]);
        assert!(matches!(s.measure_and_reset(0, &mut rng), Err(Error::Precondition(_))));
    }

    #[test]
    fn trace_out_product_and_bell() {
        let mut rng = RandomStream::new(12, &[]);
        let rho_s = random_density(2, &mut rng);
        let mut ground = ComplexMatrix::zeros(2, 2);
        ground[(0, 0)] = ONE;
        let joint = QuantumState::from_density(BasisLayout::new(3), kron(&rho_s, &ground)).unwrap();
        let reduced = joint.trace_out(2).unwrap();
        assert!(max_abs_diff(reduced.density().unwrap(), &rho_s) < 1e-15);

        let h = std::f64::consts::FRAC_1_SQRT_2;
        let bell = ComplexVector::from_vec(vec![C64::new(h, 0.0), ZERO, ZERO, C64::new(h, 0.0)]);
        let bell = QuantumState::from_density(BasisLayout::new(2), &bell * bell.adjoint()).unwrap();
        for q in 0..2 {
            let r = bell.trace_out(q).unwrap();
            let half = ComplexMatrix::identity(2, 2) * C64::new(0.5, 0.0);
            assert!(max_abs_diff(r.density().unwrap(), &half) < 1e-15);
        }
        assert!(bell.trace_out(2).is_err());
    }

    #[test]
    fn trace_out_preserves_trace_for_random_states() {
        let mut rng = RandomStream::new(13, &[]);
        for k in 0..100 {
            let rho = random_density(3, &mut rng);
            let s = QuantumState::from_density(BasisLayout::new(3), rho).unwrap();
            let r = s.trace_out(k % 3).unwrap();
            assert!((r.norm() - 1.0).abs() <= 1e-12);
            assert!(hermiticity_error(r.density().unwrap()) <= 1e-15);
        }
    }

    #[test]
    fn norm_conserved_over_many_gates() {
        let mut rng = RandomStream::new(14, &[]);
        let mut s = random_state(4, &mut rng);
        let mut d = QuantumState::from_density(BasisLayout::new(3), random_density(3, &mut rng)).unwrap();
        for step in 0..1000 {
            let u = random_unitary(2, &mut rng);
            let a = step % 4;
            let b = (a + 1 + (step / 4) % 3) % 4;
            s = s.apply_unitary(&u, &[a, b]).unwrap();
            if step % 10 == 0 {
                d = d.apply_unitary(&u, &[a % 3, (a + 1) % 3]).unwrap();
            }
        }
        assert!((s.norm() - 1.0).abs() <= 1e-12);
        assert!((d.norm() - 1.0).abs() <= 1e-12);
    }

    proptest! {
        #[test]
        fn applying_u_then_adjoint_is_identity(seed in any::<u64>(), a in 0usize..3, b in 0usize..3) {
            prop_assume!(a != b);
            let mut rng = RandomStream::new(seed, &[]);
            let s = random_state(3, &mut rng);
            let u = random_unitary(2, &mut rng);
            let back = s.apply_unitary(&u, &[a, b]).unwrap().apply_unitary(&u.adjoint(), &[a, b]).unwrap();
            prop_assert!(s.distance(&back) <= 1e-11);
        }

        #[test]
        fn partial_trace_is_linear(seed in any::<u64>(), alpha in -2.0f64..2.0, beta in -2.0f64..2.0, q in 0usize..3) {
            let mut rng = RandomStream::new(seed, &[]);
            let r1 = random_density(3, &mut rng);
            let r2 = random_density(3, &mut rng);
            let (a, b) = (C64::new(alpha, 0.0), C64::new(beta, 0.0));
            let mix = &r1 * a + &r2 * b;
            let lhs = partial_trace_qubit(&mix, 3, q);
            let rhs = partial_trace_qubit(&r1, 3, q) * a + partial_trace_qubit(&r2, 3, q) * b;
            prop_assert!(max_abs_diff(&lhs, &rhs) <= 1e-12);
        }
    }
}
