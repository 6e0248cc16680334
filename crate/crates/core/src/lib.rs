//! Continuous-time quantum snake walk simulation.
//!
//! The walker's basis states are directed fixed-length paths (snakes) in a
//! host graph. On translation-invariant hosts the walk decomposes over
//! momentum, which this crate exploits to build localized wave packets,
//! propagate them, and measure scattering through the glued part of the
//! expanded glued trees graph.

pub mod band;
pub mod cli;
pub mod error;
pub mod glued_trees;
pub mod graph;
pub mod grid;
pub mod hat;
pub mod line_dynamics;
pub mod line_spectral;
pub mod linalg;
pub mod propagator;
pub mod report;
pub mod scattering;
pub mod state;
pub mod tree_column;
pub mod word;

pub use error::{Error, Result};
