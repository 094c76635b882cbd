//! Boundary four-point connectivities of conformal loop ensembles for
//! κ ∈ (4, 8).
//!
//! The crate solves the third-order ODE satisfied by the boundary Green's
//! functions, builds Frobenius bases at both singular points, connects them,
//! and extracts the universal ratio P^(14)(23)/P^total. Closed forms at special
//! κ, the one-bulk/two-boundary factorization and a critical percolation Monte
//! Carlo serve as independent checks.
//!
//! Start with [`connection::connect_basis`] or the runnable programs in
//! `examples/`.

pub mod bulk;
pub mod cli;
pub mod closed_forms;
pub mod connection;
pub mod error;
pub mod frobenius;
pub mod ode;
pub mod perc_mc;
pub mod special;
pub mod verify;

pub use error::{Error, Result};
pub use ode::{Jet3, KappaParams, OdeSpec};
