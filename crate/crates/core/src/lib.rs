//! Numerical toolkit for Fisher information, the quantum potential and the
//! variational and thermodynamic identities that connect them, on uniform
//! one-dimensional grids.
//!
//! The modules build on each other bottom-up:
//!
//! - [`grid`]: grids, sampled fields, quadrature and finite differences.
//! - [`states`]: densities, Gibbs/heat-coupled densities, Madelung states.
//! - [`functionals`]: Fisher information, entropy, quantum potential forms,
//!   momentum fluctuations, osmotic fields.
//! - [`propagator`]: Crank–Nicolson Schrödinger evolution and the continuity,
//!   Hamilton–Jacobi and entropy-rate residuals.
//! - [`extremizers`]: maximum-entropy and Fisher-information (EPI) solvers.
//! - [`legendre`]: multiplier sweeps of the EPI problem and the
//!   Legendre-structure checks.
//! - [`thermal`]: heat fields, Fick and heat-equation evolution, thermal
//!   Fisher formulas and the coherence suite.
//! - [`report`]: the named check registry and JSON reports.

// `!(x > 0.0)` rejects NaN along with nonpositive values; stencil loops index several arrays at once.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod extremizers;
pub mod functionals;
pub mod grid;
pub mod io;
pub mod legendre;
pub mod linalg;
pub mod propagator;
pub mod report;
pub mod states;
pub mod thermal;

pub use error::{Error, Result};
pub use grid::{Grid, ScalarField};
pub use states::{Density, MadelungState, PhysicalConstants, TruncationCheck};
