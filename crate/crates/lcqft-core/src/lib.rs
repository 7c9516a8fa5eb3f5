//! Numerical machinery for Dirac fields on curved backgrounds: Clifford
//! algebra and its representations, the double cover of the Lorentz group,
//! orthonormal frames and spin connections, CCR/CAR quantization with
//! quasi-free state combinatorics, explicit Minkowski two-point functions,
//! lattice Green operators, wave-front-set style cone calculus, and causal
//! structure on grids.
//!
//! The crate is `no_std` + `alloc`; everything IO-flavoured lives in the
//! companion CLI crate.

#![cfg_attr(not(test), no_std)]
#![deny(unsafe_code)]

extern crate alloc;

pub mod causal;
pub mod dirac;
pub mod geometry;
pub mod lattice;
pub mod linalg;
pub mod microlocal;
pub mod minkowski;
pub mod quantum;
pub mod spin;

pub use num_complex::Complex64;
