//! Trained model artifact: the refitted best candidate, its CV table and the
//! scaler it expects its inputs to be transformed with.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use songsim_core::models::{CvScore, Model, ModelSpec};
use songsim_core::pairs::ScalerParams;
use songsim_core::FeatureScheme;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelArtifact {
    /// Name of the model entry in the run config.
    pub entry: String,
    pub scheme: FeatureScheme,
    pub threshold: f64,
    pub folds: usize,
    pub cv_seed: u64,
    pub result: TrainResult,
}

/// A failed grid search is stored too, so the cell is not retried on rerun.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum TrainResult {
    Trained {
        /// Present when the entry trains on scaled features.
        scaler: Option<ScalerParams>,
        best: ModelSpec,
        best_index: usize,
        cv: Vec<CvScore>,
        model: Model,
    },
    Failed {
        error: String,
    },
}

pub fn write_model<W: Write>(w: W, m: &ModelArtifact) -> serde_json::Result<()> {
    serde_json::to_writer(w, m)
}

pub fn read_model<R: Read>(r: R) -> serde_json::Result<ModelArtifact> {
    serde_json::from_reader(r)
}
