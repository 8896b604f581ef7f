//! Markov chains for sampling proper colorings of graphs with small spectral
//! radius, with exact brute-force oracles for small instances.

pub mod cli;
pub mod coupling;
pub mod dynamics;
pub mod error;
pub mod graph;
pub mod oracle;
pub mod rng;
pub mod sampler;
pub mod spectral;
pub mod structure;
pub mod uniformity;

pub use error::{Error, Result};
pub use graph::{Graph, Vertex};
