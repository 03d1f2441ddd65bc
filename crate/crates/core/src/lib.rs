//! Spectral solvers and entropy diagnostics for dissipative quantum fluids on
//! the periodic torus.

pub mod certify;
pub mod error;
pub mod functionals;
pub mod oracle;
pub mod recipes;
pub mod solver;
pub mod spectral;
pub mod state;

pub use error::{Error, Result};
