//! Learning song-to-song similarity from tags and metadata.
//!
//! The crate is `no_std` (with `alloc`) and holds every numerical piece of the
//! pipeline: text normalization and id assignment, co-occurrence ground truth,
//! the two feature schemes (tf-idf + truncated SVD and skip-gram embeddings),
//! pair-difference datasets with train-only scaling, and the regressors
//! (least squares, epsilon-SVR trained by SMO, exact k-NN and an LSH forest)
//! together with grid-search cross-validation and the scoring metrics.
//!
//! File formats, the synthetic corpus generator and the command line live in
//! the `songsim` crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod cooccur;
pub mod embed;
pub mod error;
pub mod features;
pub mod ingest;
pub mod linalg;
pub mod metrics;
pub mod models;
pub mod pairs;
pub mod rng;
pub mod svd;
pub mod text;
pub mod tfidf;

pub use error::{Error, Result};
pub use features::{FeatureMatrix, FeatureScheme};
pub use linalg::Matrix;
