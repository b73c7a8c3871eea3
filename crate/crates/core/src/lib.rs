//! Pumped-dissipative quantum dot coupled to an R-deformed cavity mode.
//!
//! The cavity obeys `[a, a†] = 1 + 2λR` with `R` the Fock parity. The crate
//! builds the deformed Jaynes-Cummings Hamiltonian and its Lindblad
//! generator, solves for steady states, and derives emission spectra and
//! `g²(0)` from them.

pub mod algebra;
pub mod cli;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod grid;
pub mod linalg;
pub mod model;
pub mod output;
pub mod scans;
pub mod spectrum;
pub mod svg;

pub use error::{Error, Result};
