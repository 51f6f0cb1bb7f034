pub mod cli;
pub mod error;
pub mod physicality;
pub mod quartic;
pub mod residual;
pub mod solution;
pub mod spectral;
pub mod weierstrass;

pub use error::{Error, Result};
