//! Quasistatic cyclic plasticity with kinematic hardening, saturation-bounded
//! backstress, and micropolar (Cosserat) elastic coupling.
//!
//! The crate simulates a rate-regularized flow rule at material points and on
//! structured hexahedral grids, and verifies the structural properties the
//! model is built around as executable checks: the backstress never leaves
//! the ball of radius `c/d`, plastic strain and backstress stay trace-free,
//! the free energy is coercive in the coupled fields, its growth obeys a
//! work inequality against admissible test stresses, and the viscous
//! regularization dissipates at a rate bounded uniformly in the relaxation
//! parameter.
//!
//! Entry points: [`material::step_point`] for single-point stepping,
//! [`evolution`] for full trajectories and parameter sweeps, [`fem`] for the
//! coupled linear solves, and [`diagnostics`] for energy reports and
//! inequality residuals. The `cosserat-af` binary wraps these behind a
//! config-file driven command line.

pub mod cli;
pub mod config;
pub mod diagnostics;
pub mod evolution;
pub mod fem;
pub mod material;
pub mod mesh;
pub mod mms;
pub mod tensor;
pub mod trace;

pub use material::ModelError;

/// Runs the code blocks of the guide in `book/` as doc-tests, so the book
/// cannot drift from the API it documents.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/material-point.md")]
    mod material_point {}
    #[doc = include_str!("../../../book/src/field-solver.md")]
    mod field_solver {}
    #[doc = include_str!("../../../book/src/energy-accounting.md")]
    mod energy_accounting {}
    #[doc = include_str!("../../../book/src/scenarios-and-cli.md")]
    mod scenarios_and_cli {}
    #[doc = include_str!("../../../book/src/verification.md")]
    mod verification {}
}
