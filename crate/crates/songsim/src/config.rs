//! Declarative run configuration (TOML) with command-line overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use songsim_core::embed::SkipGramParams;
use songsim_core::models::{svr_default_grid, LshParams, ModelSpec, DEFAULT_FOLDS};
use songsim_core::pairs::DEFAULT_TEST_FRACTION;
use songsim_core::tfidf::DEFAULT_MAX_TERMS;
use songsim_core::FeatureScheme;

use crate::error::{AppError, AppResult};

pub const DEFAULT_THRESHOLDS: [f64; 3] = [0.0, 0.01, 0.025];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TfidfConfig {
    pub max_terms: usize,
    /// Output dimension; clipped to the vocabulary size when smaller.
    pub k: usize,
}

impl Default for TfidfConfig {
    fn default() -> Self {
        TfidfConfig {
            max_terms: DEFAULT_MAX_TERMS,
            k: 100,
        }
    }
}

/// One column of the experiment matrix: a named grid of candidates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelEntry {
    pub name: String,
    #[serde(default)]
    pub candidates: Vec<ModelSpec>,
    /// Appends the linear/RBF SVR grid with this epsilon.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub svr_grid_epsilon: Option<f64>,
    /// Feature scaling; unset means on for SVR and off otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<bool>,
}

impl ModelEntry {
    pub fn single(name: &str, spec: ModelSpec) -> Self {
        ModelEntry {
            name: name.into(),
            candidates: vec![spec],
            svr_grid_epsilon: None,
            scale: None,
        }
    }

    /// Candidates in grid order, with model seeds set to `seed`.
    pub fn grid(&self, seed: u64) -> Vec<ModelSpec> {
        let mut out: Vec<ModelSpec> = self.candidates.clone();
        if let Some(eps) = self.svr_grid_epsilon {
            out.extend(svr_default_grid(eps, seed));
        }
        for spec in &mut out {
            match spec {
                ModelSpec::Svr(p) => p.seed = seed,
                ModelSpec::Lsh(p) => p.seed = seed,
                ModelSpec::Ols | ModelSpec::Knn { .. } => {}
            }
        }
        out
    }

    pub fn scaled(&self) -> bool {
        self.scale.unwrap_or_else(|| self.grid(0).iter().any(|s| matches!(s, ModelSpec::Svr(_))))
    }

    pub fn family(&self) -> &'static str {
        self.grid(0).first().map_or("none", ModelSpec::family)
    }
}

/// SVR (raw and scaled), exact and approximate k-NN for k in {1, 5, 10}, and OLS.
pub fn default_models() -> Vec<ModelEntry> {
    let mut out = Vec::new();
    for scale in [false, true] {
        out.push(ModelEntry {
            name: if scale { "svr-scaled" } else { "svr-raw" }.into(),
            candidates: Vec::new(),
            svr_grid_epsilon: Some(0.1),
            scale: Some(scale),
        });
    }
    for k in [1, 5, 10] {
        out.push(ModelEntry::single(&format!("knn-{k}"), ModelSpec::Knn { k }));
    }
    for k in [1, 5, 10] {
        out.push(ModelEntry::single(&format!("lsh-{k}"), ModelSpec::Lsh(LshParams { k, ..LshParams::default() })));
    }
    out.push(ModelEntry::single("ols", ModelSpec::Ols));
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub workdir: PathBuf,
    /// Defaults to `<workdir>/songs.jsonl`.
    pub songs: Option<PathBuf>,
    /// Defaults to `<workdir>/histories.csv`.
    pub histories: Option<PathBuf>,
    /// Precomputed ground truth; replaces the co-occurrence computation.
    pub similarity: Option<PathBuf>,
    /// Master seed for SVD, embeddings, splits, folds and models.
    pub seed: u64,
    pub schemes: Vec<FeatureScheme>,
    pub thresholds: Vec<f64>,
    /// Maximum number of song pairs per dataset.
    pub limit: usize,
    pub test_fraction: f64,
    pub both_orientations: bool,
    pub cv_folds: usize,
    pub tfidf: TfidfConfig,
    pub embed: SkipGramParams,
    pub models: Vec<ModelEntry>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            workdir: PathBuf::from("work"),
            songs: None,
            histories: None,
            similarity: None,
            seed: 0,
            schemes: vec![FeatureScheme::Tfidf, FeatureScheme::Embed],
            thresholds: DEFAULT_THRESHOLDS.to_vec(),
            limit: 2000,
            test_fraction: DEFAULT_TEST_FRACTION,
            both_orientations: false,
            cv_folds: DEFAULT_FOLDS,
            tfidf: TfidfConfig::default(),
            embed: SkipGramParams::default(),
            models: default_models(),
        }
    }
}

/// Flag overrides shared by all subcommands.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub workdir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub thresholds: Vec<f64>,
    pub schemes: Vec<FeatureScheme>,
    pub limit: Option<usize>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> AppResult<Self> {
        toml::from_str(text).map_err(|e| AppError::Usage(format!("invalid config: {e}")))
    }

    pub fn load(path: &Path) -> AppResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| AppError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(w) = &o.workdir {
            self.workdir = w.clone();
        }
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if !o.thresholds.is_empty() {
            self.thresholds = o.thresholds.clone();
        }
        if !o.schemes.is_empty() {
            self.schemes = o.schemes.clone();
        }
        if let Some(l) = o.limit {
            self.limit = l;
        }
    }

    pub fn validate(&self) -> AppResult<()> {
        let usage = |m: &str| Err(AppError::Usage(m.into()));
        if self.limit == 0 {
            return usage("limit must be positive");
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return usage("test_fraction must lie in (0, 1)");
        }
        if self.thresholds.iter().any(|t| !(0.0..1.0).contains(t)) {
            return usage("thresholds must lie in [0, 1)");
        }
        if self.cv_folds < 2 {
            return usage("cv_folds must be at least 2");
        }
        let mut names: Vec<&str> = self.models.iter().map(|m| m.name.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return usage("model entry names must be unique");
        }
        if let Some(m) = self.models.iter().find(|m| m.grid(0).is_empty()) {
            return Err(AppError::Usage(format!("model entry `{}` has no candidates", m.name)));
        }
        if let Some(m) = self.models.iter().find(|m| !m.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')) {
            return Err(AppError::Usage(format!("model entry name `{}` may only use [A-Za-z0-9_-]", m.name)));
        }
        Ok(())
    }

    pub fn songs_path(&self) -> PathBuf {
        self.songs.clone().unwrap_or_else(|| self.workdir.join("songs.jsonl"))
    }

    pub fn histories_path(&self) -> PathBuf {
        self.histories.clone().unwrap_or_else(|| self.workdir.join("histories.csv"))
    }

    pub fn skipgram(&self) -> SkipGramParams {
        SkipGramParams { seed: self.seed, ..self.embed }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use songsim_core::models::Kernel;

    #[test]
    fn default_matrix_shape() {
        let c = RunConfig::default();
        c.validate().unwrap();
        assert_eq!(c.thresholds, vec![0.0, 0.01, 0.025]);
        let svr = &c.models[0];
        assert_eq!(svr.grid(3).len(), 9);
        assert!(!svr.scaled() && c.models[1].scaled());
        assert!(!c.models[2].scaled());
        assert!(c.models[0].grid(3).iter().all(|s| matches!(s, ModelSpec::Svr(p) if p.seed == 3)));
    }

    #[test]
    fn toml_with_partial_specs() {
        let c = RunConfig::from_toml(
            r#"
            seed = 7
            schemes = ["tfidf"]
            thresholds = [0.0]
            [tfidf]
            k = 20
            [embed]
            dim = 16
            [[models]]
            name = "svr-rbf"
            candidates = [{ family = "svr", kernel = { type = "rbf", gamma = 0.01 }, c = 10.0 }]
            [[models]]
            name = "knn-3"
            candidates = [{ family = "knn", k = 3 }]
            "#,
        )
        .unwrap();
        assert_eq!(c.tfidf.max_terms, DEFAULT_MAX_TERMS);
        assert_eq!(c.embed.negatives, 5);
        let ModelSpec::Svr(p) = c.models[0].grid(7)[0] else { panic!() };
        assert_eq!(p.kernel, Kernel::Rbf { gamma: 0.01 });
        assert_eq!(p.epsilon, 0.1);
        assert!(c.models[0].scaled());
        assert_eq!(c.models[1].family(), "knn");
        assert!(RunConfig::from_toml("bogus = 1").is_err());
    }

    #[test]
    fn overrides_and_validation() {
        let mut c = RunConfig::default();
        c.apply(&Overrides {
            seed: Some(9),
            thresholds: vec![0.5],
            limit: Some(10),
            ..Overrides::default()
        });
        assert_eq!((c.seed, c.limit), (9, 10));
        assert_eq!(c.thresholds, vec![0.5]);
        c.thresholds = vec![1.0];
        assert!(matches!(c.validate(), Err(AppError::Usage(_))));
    }
}
