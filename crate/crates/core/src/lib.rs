//! Fast Bayesian tomography of quantum gate sets.

pub mod error;
pub mod linalg;
pub mod ptm;
pub mod gateset;
pub mod forward;
pub mod bayes;
pub mod simulator;
pub mod physicality;
pub mod rb;
pub mod analysis;
pub mod io;
pub mod cli;

pub use error::{Error, Result};
