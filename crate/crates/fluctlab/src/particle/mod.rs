//! Glauber-Kawasaki lattice dynamics and its observables.

mod fields;
mod io;
mod rates;
mod sim;

pub use fields::*;
pub use io::*;
pub use rates::*;
pub use sim::*;
