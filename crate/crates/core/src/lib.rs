//! Finite-resolution topological pressures and entropies of nonautonomous
//! dynamical systems: staged metric spaces, Bowen metrics, spanning/separated
//! partition functions, dimension-type (cover/packing) pressure functionals,
//! a model zoo with exact oracles, and an executable theorem harness.

pub mod bitset;
pub mod config;
pub mod error;
pub mod harness;
pub mod measure;
pub mod metric;
pub mod nds;
pub mod potential;
pub mod pressure;
pub mod runner;
pub mod solver;
pub mod span_sep;
pub mod zoo;

pub use error::Error;
