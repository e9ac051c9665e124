//! Band structures and Dirac points of a honeycomb lattice of circular
//! sound-soft or sound-hard obstacles.
//!
//! The pipeline is: [`lattice`] geometry and singular frequencies, the
//! quasi-periodic Green's function in [`qpgreens`], the Fourier-basis boundary
//! operator in [`bie`], characteristic-value solvers in [`spectral`], and the
//! Dirac-point analysis in [`dirac`].

// `!(x > 0.0)` guards deliberately reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bie;
pub mod dirac;
pub mod error;
pub mod lattice;
pub mod qpgreens;
pub mod special;
pub mod spectral;

pub use error::{Error, Result};
pub use lattice::{BlochVector, LatticeSpec, Vec2};
