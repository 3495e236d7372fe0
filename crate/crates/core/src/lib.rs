//! Energy exchange between a qubit and a bosonic bath in the spin-boson model.
//!
//! The first moment of the transferred energy is obtained from a second-order
//! time-convolutionless master equation. On top of the dynamics the crate
//! computes the energy-backflow measure, the BLP trace-distance
//! non-Markovianity measure, the resonance condition on the effective spectral
//! density, and parameter-grid sweeps of all three.

// Negated comparisons are used to reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bath;
pub mod cli;
pub mod energetics;
pub mod error;
pub mod nonmarkov;
pub mod quad;
pub mod specfun;
pub mod sweep;
pub mod tcl2;

pub use bath::{BathParams, KernelPair};
pub use error::{Error, Result};
pub use tcl2::{Coefficients, Generator, QubitState, SystemParams, TimeGrid, Trajectory};
