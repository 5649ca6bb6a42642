//! Numerical toolkit for magnetic Schrodinger operators on periodic waveguides:
//! fibered Crank-Nicolson solvers, Dirichlet-to-Neumann maps, geometric-optics
//! probes and recovery of the aligned magnetic field from boundary data.

// stencil and time-level loops index several parallel arrays at once
#![allow(clippy::needless_range_loop)]

pub mod dn;
pub mod domain;
pub mod error;
pub mod fbg;
pub mod fields;
pub mod harness;
pub mod pde;
pub mod probes;
pub mod quad;
pub mod xray;

pub use error::{Error, Result};
