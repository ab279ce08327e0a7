//! Time-harmonic acoustic scattering by a locally perturbed periodic array of
//! sound-soft obstacles.
//!
//! The periodic background Green's function is assembled from quasi-periodic
//! cell solves by an inverse Floquet-Bloch transform, and the perturbed
//! problem is closed by a boundary integral transparent boundary condition
//! on an artificial curve around the defect.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::type_complexity)]

pub mod error;
pub mod geometry;
pub mod kernels;
pub mod layer;
pub mod linalg;
pub mod quasiperiodic;
pub mod floquet;
pub mod tbc;
pub mod propagate;
pub mod harness;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
