//! Prospector heads: token-level attribution over map graphs from
//! datum-level labels.
//!
//! Layer I quantizes token embeddings into `K` concepts, turning each map
//! graph into a sprite. Layer II fits a kernel over concept monograms and
//! skip-bigrams, then convolves it over every vertex neighborhood to produce
//! a prospect map.

pub mod bench;
pub mod conv;
pub mod error;
pub mod eval;
pub mod graph;
pub mod io;
pub mod kernel;
pub mod pipeline;
pub mod quantizer;
pub mod select;
pub mod stats;
pub mod synth;
pub mod viz;

pub use error::{Error, Result};
