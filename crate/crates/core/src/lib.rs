//! Mean-square approximation of iterated Ito integrals by multiple
//! Fourier-Legendre series, and exponential Milstein / Wagner-Platen schemes
//! for semilinear SPDEs driven by trace-class noise.

pub mod cli;
pub mod coeffs;
pub mod error;
pub mod ito;
pub mod legendre;
pub mod qwiener;
pub mod rng;
pub mod spde;

pub use error::{Error, Result};
