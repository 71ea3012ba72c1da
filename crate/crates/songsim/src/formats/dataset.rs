//! Pair dataset persistence: `pairs.csv` for inspection and a JSON artifact
//! carrying the design matrix, labels, split, scaler and provenance.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use songsim_core::linalg::Matrix;
use songsim_core::pairs::{PairDataset, ScalerParams, Split};
use songsim_core::FeatureScheme;

use crate::io::fmt_f64;

/// Where a dataset came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub scheme: FeatureScheme,
    pub threshold: f64,
    pub limit: usize,
    pub both_orientations: bool,
    pub test_fraction: f64,
    pub split_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetArtifact {
    pub provenance: Provenance,
    pub pairs: Vec<(u32, u32)>,
    pub x: Matrix,
    pub y: Vec<f64>,
    /// `true` for test rows.
    pub test_mask: Vec<bool>,
    /// Fitted on the training rows only.
    pub scaler: ScalerParams,
}

impl DatasetArtifact {
    /// `ds` must already be split.
    pub fn new(ds: &PairDataset, provenance: Provenance, scaler: ScalerParams) -> Self {
        let mut test_mask = vec![false; ds.len()];
        if let Some(split) = &ds.split {
            for &i in &split.test {
                test_mask[i] = true;
            }
        }
        DatasetArtifact {
            provenance,
            pairs: ds.pairs.clone(),
            x: ds.x.clone(),
            y: ds.y.clone(),
            test_mask,
            scaler,
        }
    }

    pub fn to_dataset(&self) -> PairDataset {
        let (test, train): (Vec<usize>, Vec<usize>) = (0..self.y.len()).partition(|&i| self.test_mask[i]);
        PairDataset {
            x: self.x.clone(),
            y: self.y.clone(),
            pairs: self.pairs.clone(),
            split: Some(Split { train, test }),
            scaler: Some(self.scaler.clone()),
        }
    }

    pub fn is_consistent(&self) -> bool {
        let n = self.y.len();
        self.x.rows() == n && self.pairs.len() == n && self.test_mask.len() == n && self.scaler.dim() == self.x.cols()
    }
}

pub fn write_dataset<W: Write>(w: W, d: &DatasetArtifact) -> serde_json::Result<()> {
    serde_json::to_writer(w, d)
}

pub fn read_dataset<R: Read>(r: R) -> Result<DatasetArtifact, String> {
    let d: DatasetArtifact = serde_json::from_reader(r).map_err(|e| e.to_string())?;
    if !d.is_consistent() {
        return Err("dataset fields have inconsistent lengths".into());
    }
    Ok(d)
}

pub fn write_pairs_csv<W: Write>(mut w: W, pairs: &[(u32, u32)], y: &[f64]) -> std::io::Result<()> {
    writeln!(w, "song_a,song_b,similarity")?;
    for (&(a, b), s) in pairs.iter().zip(y) {
        writeln!(w, "{a},{b},{}", fmt_f64(*s))?;
    }
    w.flush()
}
