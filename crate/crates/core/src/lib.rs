//! Three-stage pretraining for aspect-level sentiment classifiers.
//!
//! The pipeline samples target-related sentences from a large sentence-level
//! corpus (BM25 coarse retrieval followed by embedding-space reranking),
//! converts them into pseudo aspect-level instances, pretrains a gated
//! convolutional classifier on them, runs a teacher/student guidance stage on
//! the target data where the student tracks the teacher by an exponential
//! moving average, and finally fine-tunes the student.
//!
//! Module map:
//!
//! * [`corpus`]: record types, tokenizer, vocabulary, noun tagging and
//!   pseudo-aspect extraction.
//! * [`retrieval`]: BM25 index, embedding table, coarse-to-fine sampling.
//! * [`model`]: tensors, the gated convolutional classifier with hand-written
//!   reverse-mode gradients, Adam, checkpoints.
//! * [`training`]: annealing schedule, guidance loss, EMA and the three stages.
//! * [`eval`]: metrics, Student's t-test and the ablation harness.
//! * [`config`]: flat `key=value` run configuration.
//! * [`synthetic`]: a seeded two-domain benchmark generator.

pub mod config;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod model;
pub mod retrieval;
pub mod rng;
pub mod synthetic;
pub mod training;

pub use error::{Error, Result};
