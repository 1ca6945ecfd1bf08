//! Energetic fluctuation relations for open quantum processes.
//!
//! A system starts in the Gibbs state of `H` at inverse temperature β, evolves
//! under a CPTP map given by Kraus operators while its Hamiltonian changes to
//! `H'`, and is measured in the eigenbasis of `H'`. The crate computes the
//! exact two-point-measurement energy distributions of that process and of its
//! adjoint backward process, and checks the relations between them:
//! Jarzynski-like equalities with the non-unitality factor γ, a Crooks-like
//! ratio, the split of `ΔU` into `β⁻¹K + X + ΔF`, and the entropy law
//! `ΔS = K + βX`.

pub mod channels;
pub mod distributions;
mod error;
pub mod numerics;
pub mod random;
pub mod states;
pub mod thermo;

pub use error::{Error, Result};
