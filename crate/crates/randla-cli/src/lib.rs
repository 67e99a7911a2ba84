//! Command-line harness around the randla library: matrix generation,
//! leverage diagnostics, sampled matrix products, sketched least-squares
//! solvers, low-rank approximation, and the benchmark suites.

pub mod bench;
pub mod commands;
pub mod manifest;

pub use commands::dispatch;
