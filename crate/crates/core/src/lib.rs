//! Piecewise-diffusion demand modelling and chance-constrained single-period
//! production planning.
//!
//! The crate is layered bottom-up:
//!
//! * [`demand`] closed-form diffusion moments and a pure-birth simulator,
//! * [`surface`] a Delaunay-based piecewise-linear approximation of the
//!   demand moments over the (price, advertising) rectangle,
//! * [`solver`] the sample average approximation of the planning problem,
//!   solved exactly on the piecewise-linear surface,
//! * [`stats`] normal and Student-t helpers, empirical CDFs, DKW bounds and
//!   the optimality-gap interval,
//! * [`experiment`] the misestimation study and its report,
//! * [`io`] data files, configuration and surface serialization.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod demand;
pub mod error;
pub mod experiment;
pub mod io;
pub mod solver;
pub mod stats;
pub mod surface;

pub use error::{Error, Result};
