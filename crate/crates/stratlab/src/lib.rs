//! Numerical laboratory for density-stratified incompressible flows in a
//! periodic channel.
//!
//! Two transport systems share one apparatus: a porous-media flow whose
//! velocity solves a Poisson problem for the stream function, and a Stokes
//! flow whose stream function solves a clamped biharmonic problem. Around
//! them sit the potential-energy diagnostics, the vertical decreasing
//! rearrangement with its level-set decomposition, executable forms of the
//! time-average decay lemmas, and preset experiments wiring it all together.

pub mod band;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod grid;
pub mod lemmas;
pub mod output;
pub mod rearrange;
pub mod scenarios;
pub mod snapshot;
pub mod solvers;
pub mod stencil;
pub mod transport;

pub use error::{Error, Result};
pub use grid::{Grid, ModalField, NormKind, Profile, ScalarField, TWO_PI};
pub use solvers::{Model, StreamSolution, StreamSolver};
pub use transport::{RunConfig, RunOutput, RunStatus, SimState};
