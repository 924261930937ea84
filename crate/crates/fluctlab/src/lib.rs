//! Numerical laboratory for transition layers of the stochastic Allen-Cahn
//! equation and the Glauber-Kawasaki particle system behind it.

pub mod analysis;
pub mod constants;
pub mod error;
pub mod interp;
pub mod ode;
pub mod particle;
pub mod poly;
pub mod profile;
pub mod quad;
pub mod reaction;
pub mod rng;
pub mod roots;
pub mod spde;
pub mod spectral;

pub use error::{Error, Result};
