//! Supervised column encodings for multi-token text columns.
//!
//! Each text column of a drug table is encoded with a bidirectional LSTM that
//! is trained to predict the interaction label of ordered drug pairs. The
//! trained encoder exports one fixed-dimension vector per drug and column,
//! and those vectors back a multiplicative-cosine analogy query engine
//! (`A : B :: C : ?`).
//!
//! Modules, bottom-up:
//!
//! * [`corpus`]: TSV loading, per-column tokenization, vocabularies, synthetic corpora.
//! * [`partition`]: stratified pairwise and drug held-off train/val/test splits.
//! * [`model`]: the encoder, its exact gradients, training and grid search.
//! * [`baselines`]: frequency-sampling random classifier and bag-of-words KNN.
//! * [`metrics`]: accuracy, macro/weighted F1 and Precision@K.
//! * [`analogy`]: encoding tables, the interaction store, analogy queries and simulation.

pub mod analogy;
pub mod baselines;
pub mod corpus;
mod error;
mod header;
pub mod metrics;
pub mod model;
pub mod partition;
pub mod seeds;

pub use error::{Error, Result};
