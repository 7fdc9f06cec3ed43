//! Local push solvers for personalized PageRank with offline and online edge
//! subsampling, plus online node labeling, seed-based clustering, and a
//! verification layer of dense reference solvers and Monte-Carlo checks.

pub mod appr;
pub mod cluster;
pub mod error;
pub mod fixtures;
pub mod graph;
pub mod kernel;
pub mod onl;
pub mod oracle;
pub mod random_appr;
pub mod rng;
pub mod sampler;
pub mod sparse;
pub mod sparsify;

pub use error::{Error, Result};
pub use graph::{DegreeStats, Graph, IdMap, LabelSet, LoadedGraph};
pub use sparse::SparseVector;
