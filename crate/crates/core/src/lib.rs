//! Corpus curation and corpus-quality analytics for pre-training data.
//!
//! The filtering stages run in a fixed order: language identification,
//! MinHash near-duplicate removal, then line- and document-level quality
//! heuristics. Downstream of filtering, a byte-level BPE tokenizer supplies
//! token counts for splitting the corpus into training phases, and the
//! analytics module computes lexical metrics on a reproducible sample.

pub mod analytics;
pub mod bpe;
pub mod config;
pub mod dedup;
pub mod document;
pub mod error;
pub mod hash;
pub mod ingest;
pub mod langid;
pub mod phase;
pub mod pipeline;
pub mod quality;
pub mod report;
pub mod synth;

pub use config::PipelineConfig;
pub use document::Document;
pub use error::{ForgeError, Result};
