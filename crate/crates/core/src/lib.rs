//! Conditional SHAP values split into an interventional part (the effect of
//! setting a feature directly) and a dependent part (the effect carried
//! through features that depend on it).
//!
//! The crate is `no_std` with `alloc`; file formats, the process bridge and
//! the command line live in the `shapdec` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod coalition;
pub mod distributions;
pub mod engine;
pub mod error;
pub mod models;
mod linalg;
pub mod rng;
pub mod stats;
pub mod types;
pub mod viz;

pub use coalition::{enumerate_coalitions, prefix_set, sample_permutations, Coalition, Permutation};
pub use error::{Error, Result};
pub use rng::{RngStream, StreamRng};
pub use types::{AttributionVector, Decomposition, DecompositionMeta, FeatureMatrix, Rows, Sample};
