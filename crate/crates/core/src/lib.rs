//! Stochastic and continuous cellular automata on one-dimensional periodic
//! lattices, with greedy decomposition of probabilistic rules.

pub mod cca;
pub mod decompose;
pub mod error;
pub mod experiments;
pub mod lattice;
pub mod output;
pub mod rng;
pub mod rules;
pub mod sca;

pub use error::{Error, Result, RowFault};
pub use lattice::{Configuration, Geometry, LocalRule, Lut, Plut, SimplexVector, StateId};
pub use rng::RngSeed;
