//! Quasistatic cohesive fracture with fatigue on a prescribed crack line.
//!
//! A rectangle is cut along its horizontal midline. The bulk is linear
//! elastic in antiplane shear and the crack faces carry a cohesive energy
//! that depends on the cumulated variation of the jump, so repeated
//! loading and unloading weakens the interface. Time is discretized and
//! every step is a global minimization of elastic plus incremental
//! dissipated energy.
//!
//! The crate is `no_std` with `alloc`; IO and the command line live in a
//! companion crate.

#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod evolution;
pub mod law;
pub mod linalg;
pub mod load;
pub mod mesh;
pub mod oracle;
pub mod reduced;
pub mod step;
pub mod verify;

pub use evolution::{run, EvolutionError, InitialState, StepRecord, Trajectory};
pub use law::{CohesiveLaw, LawError, LawField, LawKind};
pub use load::{LoadError, LoadProgram};
pub use mesh::{DomainSpec, Mesh, MeshError};
pub use reduced::{InterfaceEnergy, ReducedError, ReducedModel};
pub use step::{solve_step, StepError, StepOptions, StepProblem, StepSolution};

use thiserror::Error;

/// Any failure raised while building a model.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Reduced(#[from] ReducedError),
    #[error(transparent)]
    Law(#[from] LawError),
}
