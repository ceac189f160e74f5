pub mod battery;
pub mod config;
pub mod error;
pub mod inequalities;
pub mod norms;
pub mod quadrature;
pub mod report;
pub mod specfun;
pub mod transplant;

pub use error::{Error, Result};
