//! Entity resolution engine for property graphs.
//!
//! The pipeline discovers distance-based linking rules over graph patterns,
//! uses their scopes and attributes to steer structural (meta-path random
//! walk) and attribute (tripartite walk + auto-encoder) embeddings, blocks
//! candidates with random-hyperplane LSH, prunes the block graphs by edge
//! weight and dice similarity, and confirms matches by re-checking the rules,
//! yielding linked pairs with replayable witnesses.
//!
//! Numeric code is generic over the scalar type via [`scalar::Real`];
//! `f32`/`f64` aliases for the main numeric types live at the crate root.

pub mod embed;
pub mod error;
pub mod fixtures;
pub mod gdd;
pub mod graph;
pub mod lsh;
pub mod matcher;
pub mod metrics;
pub mod pattern;
pub mod pipeline;
pub mod prune;
pub mod scalar;
pub mod synth;

pub use error::{Error, ErrorKind, Result};

/// Embedding tables at the two supported precisions.
pub type EmbeddingF32 = embed::EmbeddingTable<f32>;
pub type EmbeddingF64 = embed::EmbeddingTable<f64>;

/// Auto-encoders at the two supported precisions.
pub type AutoEncoderF32 = embed::autoencoder::AutoEncoder<f32>;
pub type AutoEncoderF64 = embed::autoencoder::AutoEncoder<f64>;
