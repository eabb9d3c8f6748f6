//! Dense linear algebra and register-level primitives shared by every
//! simulation path.

pub mod gates;
pub mod matrix;
pub mod rng;
pub mod state;

pub use matrix::{
    hermitian_expm, is_hermitian, is_unitary, unitarity_error, ComplexMatrix, ComplexVector, C64,
};
pub use rng::RandomStream;
pub use state::{sample_shots, BasisLayout, QuantumState, StateData};
