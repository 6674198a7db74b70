//! Document vectors learned by predicting each document's words and n-gram
//! tokens with negative-sampling SGD, plus the bag-of-ngram and
//! Naive-Bayes-weighted baselines and the logistic-regression head used to
//! classify them.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, corpus
//! ingestion, multi-threaded training and the command line live in the
//! `dvngram` companion crate.
//!
//! A minimal end-to-end run:
//!
//! ```
//! use dvngram_core::corpus::{tokenize, Vocabulary, NoiseTable};
//! use dvngram_core::model::{EmbeddingModel, TrainConfig};
//! use dvngram_core::trainer::train;
//!
//! let texts = ["a great film", "a dull film"];
//! let docs: Vec<Vec<String>> = texts.iter().map(|t| tokenize(t)).collect();
//! let vocab = Vocabulary::build(&docs, 2, 1).unwrap();
//! let encoded: Vec<_> = docs
//!     .iter()
//!     .enumerate()
//!     .map(|(i, words)| vocab.encode(i as u32, words))
//!     .collect();
//!
//! let config = TrainConfig { dim: 8, epochs: 2, ..TrainConfig::default() };
//! let model = EmbeddingModel::<f64>::init(docs.len(), vocab.len(), &config).unwrap();
//! let noise = NoiseTable::new(&vocab, config.noise_exponent).unwrap();
//! let reports = train(&model, &encoded, &noise, &config).unwrap();
//! assert_eq!(reports.len(), 2);
//! ```
#![no_std]

extern crate alloc;

pub mod baselines;
pub mod classifier;
pub mod corpus;
mod error;
pub mod math;
pub mod model;
pub mod trainer;

pub use error::{Error, Result};

/// The seedable generator used everywhere a run must be reproducible.
pub type DvRng = rand_chacha::ChaCha8Rng;
