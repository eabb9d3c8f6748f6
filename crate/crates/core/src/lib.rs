//! Classical simulation of dephasing-assisted exciton transport as it would
//! run on a digital quantum computer.
//!
//! Two stochastic algorithms reproduce site-dephasing dynamics on average:
//!
//! * [`noise`]: unitary trajectories under a Haken-Strobl Hamiltonian whose
//!   site energies fluctuate with white or Ornstein-Uhlenbeck noise;
//! * [`collision`]: repeated system-ancilla collisions with a single ancilla
//!   qubit that is reset after every interaction.
//!
//! Both are checked against [`lindblad`], an RK4 integration of the
//! site-dephasing master equation. [`harness`] wires everything into
//! reproducible scenarios that write CSV files.

pub mod collision;
pub mod error;
pub mod grid;
pub mod harness;
pub mod lindblad;
pub mod network;
pub mod noise;
pub mod quantum;
pub mod stats;

pub use error::{Error, Result};
