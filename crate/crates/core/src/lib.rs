//! Tools for evaluating generated summaries, with or without reference
//! summaries.
//!
//! - [`corpus`]: loading, OCR-noise cleaning, tokenizing and chunking documents
//! - [`validity`]: heuristic detection of garbage summaries
//! - [`topics`]: LDA by collapsed Gibbs sampling and Topic Similarity
//! - [`metrics`]: ROUGE, BLEU, METEOR and chunked score aggregation
//! - [`report`]: mean±stddev tables, random-summary baselines, rendering
//! - [`genclient`]: summary generation against an HTTP completion endpoint
//! - [`cli`]: the config-driven `sumeval` command line

pub mod cli;
pub mod corpus;
pub mod genclient;
pub mod metrics;
pub mod report;
pub mod topics;
pub mod validity;

pub use corpus::{Chunk, ChunkParams, Document};
pub use metrics::{Prf, ScoreRecord};
pub use report::{EvaluationReport, SummaryRecord};
pub use topics::{TopicModel, TopicVector};
pub use validity::ValidityVerdict;
