//! Randomized linear algebra toolkit: sampling- and projection-based sketches,
//! statistical leverage scores, sketched least-squares solvers, and low-rank
//! approximation, with seeded-deterministic randomness throughout.

pub mod config;
pub mod error;
pub mod factor;
pub mod gen;
pub mod io;
pub mod leverage;
pub mod matmul;
pub mod matrix;
pub mod rng;
pub mod sketch;

pub mod lowrank;
pub mod lstsq;

pub use error::{Error, Result};
pub use matrix::DenseMatrix;
pub use rng::SeedSpec;
