//! PageRank versus degree on undirected and directed multigraphs.
//!
//! The crate provides sparse PageRank solvers with certified stopping rules,
//! generators for configuration-model, preferential-attachment and circulant
//! union graphs, samplers for the corresponding local-limit trees, and the
//! tail statistics used to compare PageRank and degree distributions.

pub mod error;
pub mod generators;
pub mod graph;
pub mod limit_trees;
pub mod pagerank;
pub mod rng;
pub mod tail;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub use graph::{Digraph, Graph, RootSample};
pub use pagerank::{Damping, PageRankVector, SolverOptions};
pub use rng::SeedStream;
