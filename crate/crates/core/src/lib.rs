//! Stationary sum-stable (SαS) and max-stable (α-Fréchet) random fields on
//! Z^d built from nonsingular group actions.
//!
//! The crate classifies the underlying action as positive or null through
//! dual-operator series tests, simulates the fields, and evaluates ergodicity,
//! weak-mixing and mixing criteria both analytically and on samples.

pub mod classification;
pub mod cli;
pub mod diagnostics;
pub mod error;
pub mod examples;
pub mod lattice;
pub mod markov;
pub mod measure_space;
pub mod simulate;
pub mod spectral;

pub use error::{FieldError, Result};
pub use lattice::{LatticeIndex, Window};
