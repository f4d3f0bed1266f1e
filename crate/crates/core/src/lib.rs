//! Relation extraction and classification over shortest dependency paths.
//!
//! The crate turns annotated abstracts into entity-encoded sentences, reads
//! externally produced dependency parses, extracts the path between each
//! entity pair, and trains a small convolutional classifier on the paths.

pub mod cli;
pub mod cnn;
pub mod corpus;
pub mod depgraph;
pub mod embeddings;
pub mod error;
pub mod extract;
pub mod labels;
pub mod pipeline;
pub mod real;

pub use error::{Error, Result};
