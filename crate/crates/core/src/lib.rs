//! Simulation-universality analysis for many-qudit Hamiltonians.
//!
//! A Hamiltonian on qudits of arbitrary (possibly mixed) dimensions is
//! expanded over tensor products of Gell-Mann matrices. From that expansion
//! the crate can
//!
//! - classify the Hamiltonian's simulation-universality class
//!   ([`model::classify`]),
//! - compile a [`program::SimulationProgram`] that isolates any single
//!   coupling term using only the Hamiltonian and local unitaries
//!   ([`isolation::isolate_term`]),
//! - retarget a coupling onto any other coupling of the same support
//!   ([`majorization::retarget_term`]),
//! - eliminate qudits from a coupling and reduce it to two-body couplings
//!   ([`universality::drop_qudit`], [`universality::reduce_to_two_body`]),
//! - produce a verified spanning set of two-qudit couplings for every
//!   entangling Hamiltonian that is not an odd qubit Hamiltonian
//!   ([`universality::connect_all`]).
//!
//! Every program has an exact effective-Hamiltonian semantics evaluated on
//! dense matrices, and shallow programs can additionally be lowered to
//! product-formula unitary sequences and checked against exact evolution.

pub mod cli;
pub mod error;
pub mod isolation;
pub mod linalg;
pub mod majorization;
pub mod model;
pub mod program;
pub mod random;
pub mod serial;
pub mod universality;

pub use error::{Error, Result};
pub use linalg::{GellMannLabel, LocalUnitary, Operator};
pub use model::{classify, expand, reconstruct, CouplingTerm, Expansion, QuditSystem, Verdict};
pub use program::SimulationProgram;
