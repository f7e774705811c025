pub mod algebra;
pub mod cochain;
pub mod error;
pub mod findim;
pub mod jlo;
pub mod peterweyl;
pub mod rng;
pub mod simplex;
pub mod spectral;
pub mod suq2;
pub mod synthetic;

pub use error::{Error, Result};
