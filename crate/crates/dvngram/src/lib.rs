//! File formats, IMDB ingestion, multi-threaded training and the
//! experiment pipeline around `dvngram-core`.

pub mod config;
pub mod error;
pub mod formats;
pub mod ingest;
pub mod parallel;
pub mod pipeline;

pub use error::{Error, Result};
