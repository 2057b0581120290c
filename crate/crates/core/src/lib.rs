//! Local probabilities and Green functions of random walks killed on leaving
//! the half space {x_1 > 0}: exact lattice computation, Monte Carlo, and
//! evaluation of the heavy-tailed asymptotics.

pub mod error;
pub mod numerics;
pub mod stable;
pub mod step;
pub mod lattice;
pub mod mc;
pub mod asymptotics;
pub mod harness;

pub use error::{Error, Result};
