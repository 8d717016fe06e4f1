//! Deterministic simulator for communication-efficient federated optimization.
//!
//! The crate simulates server-orchestrated optimization over a population of
//! clients holding disjoint shards of a LIBSVM-format dataset. It provides a
//! recursive variance-reduced local method alongside SCAFFOLD and FedAvg
//! baselines, the two nonconvex benchmark objectives they are usually compared
//! on, keyed counter-based randomness so runs replay bit-identically under any
//! parallelism, and calculators for the methods' prescribed step sizes and
//! round-count bounds.

pub mod algorithms;
pub mod dataset;
pub mod error;
pub mod exec;
pub mod model;
pub mod objective;
pub mod sampling;
pub mod theory;

pub use dataset::{ClientPartition, SparseDataset};
pub use error::SimError;
pub use exec::ExecMode;
pub use model::ModelVector;
pub use objective::ObjectiveSpec;
