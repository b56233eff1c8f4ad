//! Finite-dimensional quantum measurement numerics.
//!
//! POVMs and spectral measures on finite sample spaces, Born statistics,
//! spin-½ observables on the Bloch ball, Naimark dilation, stochastic
//! smearing, and `hbar`-parameterized families of POVMs (asymptotic spectral
//! measures) certified on finite `hbar` nets.

pub mod asm;
pub mod config;
pub mod error;
pub mod linalg;
pub mod measures;
pub mod riesz;
pub mod sampling;
pub mod spin;

pub use config::{PassRule, Tolerances};
pub use error::{Error, Result};
pub use linalg::{ComplexMatrix, DensityOperator, HermitianOperator};
pub use measures::{Povm, Pvm, SampleSpace, StochasticMatrix, Subset};
