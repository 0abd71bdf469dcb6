//! Minority-class text augmentation for multi-class food-hazard classification.
//!
//! The crate is organised as a pipeline:
//!
//! - [`corpus`]: ingestion, validation and cleaning of incident records, plus label spaces.
//! - [`augment`]: budgeted allocation of synthetic samples to minority classes and the
//!   three word-level augmenters (synonym replacement, random swap, contextual insertion).
//! - [`features`]: tokenization and TF-IDF vectorization into sparse matrices.
//! - [`models`]: six classical classifiers trained on TF-IDF features.
//! - [`evaluate`]: macro-F1, the two-subtask hierarchical score, grouped confusion and
//!   Kruskal-Wallis comparisons.
//! - [`tune`]: trial-based hyperparameter search over finite grids.
//! - [`experiment`]: manifests and the orchestration used by the command-line tool.

pub mod augment;
pub mod corpus;
pub mod error;
pub mod evaluate;
pub mod experiment;
pub mod features;
pub mod models;
pub mod rng;
pub mod tune;

pub use error::{Error, Result};
