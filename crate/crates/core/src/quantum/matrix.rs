//! Dense complex matrices and the Hermitian exponential.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type ComplexMatrix = DMatrix<C64>;
pub type ComplexVector = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

const EIGEN_EPS: f64 = 1e-15;
const EIGEN_MAX_ITER: usize = 10_000;

/// Largest entry modulus.
pub fn max_abs(m: &ComplexMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// Largest entrywise modulus of `a - b`.
pub fn max_abs_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .fold(0.0, |acc, (x, y)| acc.max((x - y).norm()))
}

/// max |A - A†|.
pub fn hermiticity_error(m: &ComplexMatrix) -> f64 {
    let n = m.nrows();
    let mut err = 0.0f64;
    for r in 0..n {
        for c in r..n {
            err = err.max((m[(r, c)] - m[(c, r)].conj()).norm());
        }
    }
    err
}

/// `max|A - A†| <= 1e-12 * max|A|`.
pub fn is_hermitian(m: &ComplexMatrix) -> bool {
    m.is_square() && hermiticity_error(m) <= 1e-12 * max_abs(m).max(f64::MIN_POSITIVE)
}

/// max |U†U - I|.
pub fn unitarity_error(u: &ComplexMatrix) -> f64 {
    let prod = u.adjoint() * u;
    let id = ComplexMatrix::identity(u.nrows(), u.ncols());
    max_abs_diff(&prod, &id)
}

pub fn is_unitary(u: &ComplexMatrix) -> bool {
    u.is_square() && unitarity_error(u) <= 1e-10
}

pub fn commutator(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a * b - b * a
}

pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

pub fn real_diagonal(values: &[f64]) -> ComplexMatrix {
    ComplexMatrix::from_diagonal(&ComplexVector::from_iterator(
        values.len(),
        values.iter().map(|&v| C64::new(v, 0.0)),
    ))
}

/// Hermitian eigendecomposition `A = V diag(λ) V†`.
pub fn hermitian_eigen(a: &ComplexMatrix) -> Result<(Vec<f64>, ComplexMatrix)> {
    if !is_hermitian(a) {
        return Err(Error::Precondition(format!(
            "matrix is not Hermitian (max|A - A†| = {:.3e})",
            hermiticity_error(a)
        )));
    }
    let eig = a
        .clone()
        .try_symmetric_eigen(EIGEN_EPS, EIGEN_MAX_ITER)
        .ok_or_else(|| Error::Numeric("Hermitian eigensolver did not converge".into()))?;
    Ok((eig.eigenvalues.iter().copied().collect(), eig.eigenvectors))
}

/// `exp(-i * scale * A)` for Hermitian `A`, built from its eigendecomposition.
pub fn hermitian_expm(a: &ComplexMatrix, scale: f64) -> Result<ComplexMatrix> {
    let (values, vectors) = hermitian_eigen(a)?;
    Ok(expm_from_eigen(&values, &vectors, scale))
}

/// Rebuilds `V diag(exp(-i scale λ)) V†` from a cached eigendecomposition.
pub fn expm_from_eigen(values: &[f64], vectors: &ComplexMatrix, scale: f64) -> ComplexMatrix {
    let n = values.len();
    let mut scaled = vectors.clone();
    for (c, &lambda) in values.iter().enumerate() {
        let phase = C64::from_polar(1.0, -scale * lambda);
        for r in 0..n {
            scaled[(r, c)] *= phase;
        }
    }
    scaled * vectors.adjoint()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::gates;

    fn taylor_expm(a: &ComplexMatrix, scale: f64, terms: usize) -> ComplexMatrix {
        let n = a.nrows();
        let x = a * C64::new(0.0, -scale);
        let mut term = ComplexMatrix::identity(n, n);
        let mut sum = term.clone();
        for k in 1..terms {
            term = &term * &x / C64::new(k as f64, 0.0);
            sum += &term;
        }
        sum
    }

    fn ring4() -> ComplexMatrix {
        let e = [0.44, 0.24, -3.22, 0.36];
        let mut h = real_diagonal(&e);
        for i in 0..4 {
            let j = (i + 1) % 4;
            h[(i, j)] = ONE;
            h[(j, i)] = ONE;
        }
        h
    }

    #[test]
    fn exponential_of_zero_is_identity() {
        let u = hermitian_expm(&ComplexMatrix::zeros(2, 2), 1.0).unwrap();
        assert!(max_abs_diff(&u, &ComplexMatrix::identity(2, 2)) < 1e-15);
    }

    #[test]
    fn pauli_x_quarter_turn() {
        let u = hermitian_expm(&gates::pauli_x(), std::f64::consts::FRAC_PI_2).unwrap();
        let expected = gates::pauli_x() * C64::new(0.0, -1.0);
        assert!(max_abs_diff(&u, &expected) < 1e-14);
    }

    #[test]
    fn ring_exponential_matches_taylor_series() {
        let h = ring4();
        let u = hermitian_expm(&h, 0.01).unwrap();
        assert!(unitarity_error(&u) <= 1e-12);
        let oracle = taylor_expm(&h, 0.01, 20);
        assert!(max_abs_diff(&u, &oracle) <= 1e-12);
    }

    #[test]
    fn rejects_non_hermitian() {
        let mut a = ComplexMatrix::zeros(2, 2);
        a[(0, 1)] = ONE;
        assert!(matches!(hermitian_expm(&a, 1.0), Err(Error::Precondition(_))));
    }

    #[test]
    fn unitary_for_large_arguments() {
        let h = ring4();
        let scale = 10.0 / h.norm();
        let u = hermitian_expm(&h, scale).unwrap();
        assert!(unitarity_error(&u) <= 1e-10);
    }
}
