//! Standard gate matrices.
//!
//! Rotation conventions: `RZ(θ) = exp(-iθZ/2)`, `RXX(θ) = exp(-iθ X⊗X/2)`,
//! `RYY(θ) = exp(-iθ Y⊗Y/2)`, `RZX(θ) = exp(-iθ Z⊗X/2)`. For two-qubit
//! gates the first target is the more significant factor of the tensor
//! product.

use super::matrix::{kron, ComplexMatrix, C64, I, ONE, ZERO};

fn m2(a: C64, b: C64, c: C64, d: C64) -> ComplexMatrix {
    ComplexMatrix::from_row_slice(2, 2, &[a, b, c, d])
}

pub fn identity(n_qubits: usize) -> ComplexMatrix {
    let d = 1usize << n_qubits;
    ComplexMatrix::identity(d, d)
}

pub fn pauli_x() -> ComplexMatrix {
    m2(ZERO, ONE, ONE, ZERO)
}

pub fn pauli_y() -> ComplexMatrix {
    m2(ZERO, -I, I, ZERO)
}

pub fn pauli_z() -> ComplexMatrix {
    m2(ONE, ZERO, ZERO, -ONE)
}

/// `exp(-i θ/2 P)` for an operator with `P² = I`.
fn pauli_rotation(p: &ComplexMatrix, theta: f64) -> ComplexMatrix {
    let n = p.nrows();
    let (s, c) = (theta / 2.0).sin_cos();
    ComplexMatrix::identity(n, n) * C64::new(c, 0.0) - p * C64::new(0.0, s)
}

pub fn rz(theta: f64) -> ComplexMatrix {
    pauli_rotation(&pauli_z(), theta)
}

pub fn rxx(theta: f64) -> ComplexMatrix {
    pauli_rotation(&kron(&pauli_x(), &pauli_x()), theta)
}

pub fn ryy(theta: f64) -> ComplexMatrix {
    pauli_rotation(&kron(&pauli_y(), &pauli_y()), theta)
}

pub fn rzx(theta: f64) -> ComplexMatrix {
    pauli_rotation(&kron(&pauli_z(), &pauli_x()), theta)
}
