//! Per-song feature vectors produced by one of the feature schemes.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureScheme {
    /// Count-weighted tf-idf reduced by truncated SVD.
    Tfidf,
    /// Weighted average of skip-gram tag and artist vectors.
    Embed,
}

impl FeatureScheme {
    pub fn as_str(self) -> &'static str {
        match self {
            FeatureScheme::Tfidf => "tfidf",
            FeatureScheme::Embed => "embed",
        }
    }
}

impl fmt::Display for FeatureScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FeatureScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tfidf" => Ok(FeatureScheme::Tfidf),
            "embed" => Ok(FeatureScheme::Embed),
            _ => Err(Error::invalid("scheme", "expected `tfidf` or `embed`")),
        }
    }
}

/// Dense feature rows indexed by song id.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    scheme: FeatureScheme,
    song_ids: Vec<u32>,
    rows: Matrix,
    index: BTreeMap<u32, usize>,
}

impl FeatureMatrix {
    /// `song_ids[i]` labels row `i`; ids must be unique.
    pub fn new(scheme: FeatureScheme, song_ids: Vec<u32>, rows: Matrix) -> Result<Self> {
        if song_ids.len() != rows.rows() {
            return Err(Error::LengthMismatch {
                expected: rows.rows(),
                actual: song_ids.len(),
            });
        }
        let mut index = BTreeMap::new();
        for (i, &id) in song_ids.iter().enumerate() {
            if index.insert(id, i).is_some() {
                return Err(Error::invalid("song_ids", alloc::format!("duplicate song id {id}")));
            }
        }
        Ok(FeatureMatrix {
            scheme,
            song_ids,
            rows,
            index,
        })
    }

    pub fn scheme(&self) -> FeatureScheme {
        self.scheme
    }

    pub fn dim(&self) -> usize {
        self.rows.cols()
    }

    pub fn len(&self) -> usize {
        self.song_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.song_ids.is_empty()
    }

    pub fn song_ids(&self) -> &[u32] {
        &self.song_ids
    }

    pub fn matrix(&self) -> &Matrix {
        &self.rows
    }

    pub fn get(&self, song_id: u32) -> Option<&[f64]> {
        self.index.get(&song_id).map(|&i| self.rows.row(i))
    }
}
