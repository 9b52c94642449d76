//! Pairwise-masking baselines sharing the LightSecAgg envelope.

pub mod graph;
pub mod keyagree;
pub mod secagg;

pub use graph::{default_degree, local_threshold, AssortmentGraph};
pub use keyagree::{pairwise_seed, DhGroup, KeyPair};
pub use secagg::{PairwiseParams, SecAggServer, SecAggUser, UserSeeds};
