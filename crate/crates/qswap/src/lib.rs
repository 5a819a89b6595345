//! Simulation of qudit entanglement swapping over passive linear optics.
//!
//! Sources and ancillas are Gaussian (two-mode squeezers, coherent states,
//! heralded single photons) and all detectors are threshold detectors, so
//! every click statistic is an inclusion–exclusion sum of Gaussian vacuum
//! overlaps. A truncated Fock simulator backs the Gaussian path as an
//! independent oracle and is also used to discover heralding patterns.

pub mod circuits;
mod dd;
pub mod cli;
pub mod detection;
pub mod error;
pub mod fock;
pub mod gaussian;
pub mod keyrate;
pub mod linalg;
pub mod optimizer;
pub mod validation;

pub use error::{Error, Result};

pub type C64 = num_complex::Complex64;
pub type CMat = nalgebra::DMatrix<C64>;
