//! Stage runner. Every stage reads and writes files in the workdir and is
//! skipped when the content hashes of its inputs and parameters match the
//! manifest entry left by its last successful run.

use std::collections::BTreeMap;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};
use songsim_core::cooccur::{build_similarity_graph, filter_graph, SimilarityGraph, SimilarityThreshold};
use songsim_core::embed::{build_corpus, build_feature_matrix_embed, train_skipgram};
use songsim_core::ingest::{build_song_records, SongRecord};
use songsim_core::pairs::{build_pair_matrix, select_pairs};
use songsim_core::svd::{fit_truncated_svd, project_features};
use songsim_core::tfidf::{build_documents, fit_vocabulary, tfidf_transform};
use songsim_core::{FeatureMatrix, FeatureScheme};

use crate::config::{ModelEntry, RunConfig};
use crate::error::{AppError, AppResult, IoContext};
use crate::eval::{render_tables, score_cell, threshold_label, train_entry, write_reports, write_timings, EvalReport};
use crate::formats::dataset::{read_dataset, write_dataset, write_pairs_csv, DatasetArtifact, Provenance};
use crate::formats::embedding::write_embedding;
use crate::formats::features::{read_features, write_features};
use crate::formats::model::{read_model, write_model};
use crate::formats::tfidf::{write_tfidf_model, TfidfModel};
use crate::formats::FormatError;
use crate::io::histories::{parse_histories, read_user_histories, write_user_histories};
use crate::io::idmap::write_idmap;
use crate::io::records::{read_records, write_records};
use crate::io::similarity::{parse_similarity_csv, write_similarity_csv};
use crate::io::songs::parse_song_docs;
use crate::io::{create, open};

pub const MANIFEST: &str = "manifest.json";
pub const LOCK: &str = ".songsim.lock";

pub const RECORDS: &str = "records.jsonl";
pub const USER_HISTORIES: &str = "user_histories.csv";
pub const SIMILARITY: &str = "similarity.csv";
pub const REPORTS: &str = "reports.csv";
pub const TABLES: &str = "tables.txt";
pub const TIMINGS: &str = "timings.csv";

pub fn features_file(scheme: FeatureScheme) -> String {
    format!("features_{scheme}.txt")
}

fn scheme_model_file(scheme: FeatureScheme) -> &'static str {
    match scheme {
        FeatureScheme::Tfidf => "tfidf_model.txt",
        FeatureScheme::Embed => "embedding.txt",
    }
}

pub fn pairs_file(scheme: FeatureScheme, threshold: f64) -> String {
    format!("pairs_{scheme}_{}.csv", threshold_label(threshold))
}

pub fn dataset_file(scheme: FeatureScheme, threshold: f64) -> String {
    format!("dataset_{scheme}_{}.json", threshold_label(threshold))
}

pub fn model_file(scheme: FeatureScheme, threshold: f64, entry: &str) -> String {
    format!("model_{scheme}_{}_{entry}.json", threshold_label(threshold))
}

fn timing_file(model: &str) -> String {
    format!("{model}.seconds")
}

/// What happened to one stage in this invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct StageRun {
    pub name: String,
    pub computed: bool,
    pub seconds: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
struct ManifestEntry {
    key: String,
    outputs: BTreeMap<String, String>,
}

type Manifest = BTreeMap<String, ManifestEntry>;

/// An input file and the stage that produces it (`None` for user files).
struct Input {
    path: PathBuf,
    producer: Option<&'static str>,
}

fn sha256_file(path: &Path) -> AppResult<String> {
    let bytes = fs::read(path).at(path)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn format_error(path: &Path, e: FormatError) -> AppError {
    AppError::parse(path, e.line, e.message)
}

/// Removes the lock file when dropped.
struct LockGuard(PathBuf);

impl Drop for LockGuard {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.0);
    }
}

/// A locked workdir plus the resolved configuration.
pub struct Workspace {
    pub cfg: RunConfig,
    dir: PathBuf,
    manifest: Manifest,
    force: bool,
    runs: Vec<StageRun>,
    _lock: LockGuard,
}

impl Workspace {
    pub fn open(cfg: RunConfig, force: bool) -> AppResult<Self> {
        cfg.validate()?;
        let dir = cfg.workdir.clone();
        fs::create_dir_all(&dir).at(&dir)?;
        let lock_path = dir.join(LOCK);
        match OpenOptions::new().write(true).create_new(true).open(&lock_path) {
            Ok(mut f) => {
                let _ = writeln!(f, "{}", std::process::id());
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => return Err(AppError::Locked(lock_path)),
            Err(e) => return Err(AppError::io(&lock_path, e)),
        }
        let lock = LockGuard(lock_path);
        let manifest_path = dir.join(MANIFEST);
        let manifest = match fs::read(&manifest_path) {
            Ok(bytes) => serde_json::from_slice(&bytes).unwrap_or_else(|e| {
                log::warn!("{}: unreadable manifest ({e}); recomputing everything", manifest_path.display());
                Manifest::new()
            }),
            Err(_) => Manifest::new(),
        };
        Ok(Workspace {
            cfg,
            dir,
            manifest,
            force,
            runs: Vec::new(),
            _lock: lock,
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn runs(&self) -> &[StageRun] {
        &self.runs
    }

    fn internal(&self, name: &str, producer: &'static str) -> Input {
        Input {
            path: self.path(name),
            producer: Some(producer),
        }
    }

    fn save_manifest(&self) -> AppResult<()> {
        let path = self.path(MANIFEST);
        let text = serde_json::to_string_pretty(&self.manifest).map_err(|e| AppError::Data(e.to_string()))?;
        fs::write(&path, text).at(&path)
    }

    /// Runs `compute` unless the manifest shows identical inputs, parameters
    /// and untouched outputs. Returns whether the stage was computed.
    fn run_stage(
        &mut self,
        name: String,
        stage: &'static str,
        inputs: &[Input],
        params: serde_json::Value,
        outputs: &[String],
        compute: impl FnOnce(&Self) -> AppResult<()>,
    ) -> AppResult<bool> {
        let start = Instant::now();
        let mut hasher = Sha256::new();
        hasher.update(name.as_bytes());
        hasher.update(params.to_string().as_bytes());
        for input in inputs {
            if !input.path.exists() {
                return Err(match input.producer {
                    Some(producer) => AppError::MissingArtifact {
                        path: input.path.clone(),
                        stage: producer,
                    },
                    None => AppError::io(&input.path, std::io::ErrorKind::NotFound.into()),
                }
                .in_stage(stage));
            }
            hasher.update(sha256_file(&input.path)?.as_bytes());
        }
        let key = hex::encode(hasher.finalize());

        if !self.force {
            if let Some(entry) = self.manifest.get(&name) {
                let fresh = entry.key == key
                    && outputs.iter().all(|o| {
                        let p = self.path(o);
                        entry.outputs.get(o).is_some_and(|h| sha256_file(&p).ok().as_ref() == Some(h))
                    });
                if fresh {
                    log::info!("{name}: up to date");
                    self.runs.push(StageRun {
                        name,
                        computed: false,
                        seconds: start.elapsed().as_secs_f64(),
                    });
                    return Ok(false);
                }
            }
        }

        log::info!("{name}: computing");
        self.manifest.remove(&name);
        for o in outputs {
            let _ = fs::remove_file(self.path(o));
        }
        compute(self).map_err(|e| e.in_stage(stage))?;
        let mut hashes = BTreeMap::new();
        for o in outputs {
            hashes.insert(o.clone(), sha256_file(&self.path(o))?);
        }
        self.manifest.insert(name.clone(), ManifestEntry { key, outputs: hashes });
        self.save_manifest()?;
        self.runs.push(StageRun {
            name,
            computed: true,
            seconds: start.elapsed().as_secs_f64(),
        });
        Ok(true)
    }

    pub fn ingest(&mut self) -> AppResult<bool> {
        let songs = self.cfg.songs_path();
        let histories = self.cfg.histories_path();
        let use_histories = self.cfg.similarity.is_none() || histories.exists();
        let mut inputs = vec![Input {
            path: songs.clone(),
            producer: None,
        }];
        if use_histories {
            inputs.push(Input {
                path: histories.clone(),
                producer: None,
            });
        }
        let outputs: Vec<String> = [RECORDS, "idmap_songs.tsv", "idmap_artists.tsv", "idmap_albums.tsv", "idmap_users.tsv", USER_HISTORIES]
            .map(String::from)
            .to_vec();
        self.run_stage("ingest".into(), "ingest", &inputs, json!({}), &outputs, |ws| {
            let parsed = parse_song_docs(open(&songs, "ingest")?).at(&songs)?;
            parsed.log_issues(&songs);
            let (records, ids) = build_song_records(&parsed.items);
            if records.is_empty() {
                return Err(AppError::Data(format!("{}: no usable song documents", songs.display())));
            }
            let (user_histories, users) = if use_histories {
                let table = parse_histories(open(&histories, "ingest")?, &ids.songs)
                    .map_err(|e| AppError::Data(format!("{}: {e}", histories.display())))?;
                table.log_issues(&histories);
                if table.items.unknown_songs > 0 {
                    log::warn!("{}: {} rows name unknown songs", histories.display(), table.items.unknown_songs);
                }
                (table.items.histories, table.items.users)
            } else {
                (Vec::new(), Default::default())
            };
            log::info!("ingest: {} songs, {} users", records.len(), user_histories.len());
            let p = ws.path(RECORDS);
            write_records(create(&p)?, &records).at(&p)?;
            for (name, map) in [("idmap_songs.tsv", &ids.songs), ("idmap_artists.tsv", &ids.artists), ("idmap_albums.tsv", &ids.albums), ("idmap_users.tsv", &users)] {
                let p = ws.path(name);
                write_idmap(create(&p)?, map).at(&p)?;
            }
            let p = ws.path(USER_HISTORIES);
            write_user_histories(create(&p)?, &user_histories).map_err(|e| AppError::Data(format!("{}: {e}", p.display())))?;
            Ok(())
        })
    }

    pub fn groundtruth(&mut self) -> AppResult<bool> {
        let outputs = vec![SIMILARITY.to_string()];
        let n_songs_input = self.internal(RECORDS, "ingest");
        if let Some(external) = self.cfg.similarity.clone() {
            let inputs = [
                Input {
                    path: external.clone(),
                    producer: None,
                },
                n_songs_input,
            ];
            return self.run_stage("groundtruth".into(), "groundtruth", &inputs, json!({"source": "file"}), &outputs, |ws| {
                let parsed = parse_similarity_csv(open(&external, "groundtruth")?)
                    .map_err(|e| AppError::Data(format!("{}: {e}", external.display())))?;
                parsed.log_issues(&external);
                let n = ws.load_records()?.len() as u32;
                if let Some(bad) = parsed.items.nodes().find(|&id| id >= n) {
                    return Err(AppError::Data(format!("{}: song id {bad} is not in the song id map", external.display())));
                }
                ws.write_similarity(&parsed.items)
            });
        }
        let inputs = [self.internal(USER_HISTORIES, "ingest")];
        self.run_stage("groundtruth".into(), "groundtruth", &inputs, json!({"source": "histories"}), &outputs, |ws| {
            let p = ws.path(USER_HISTORIES);
            let histories = read_user_histories(open(&p, "ingest")?).map_err(|e| AppError::Data(format!("{}: {e}", p.display())))?;
            let g = build_similarity_graph(&histories)?;
            log::info!("groundtruth: {} songs, {} edges", g.node_count(), g.edge_count());
            ws.write_similarity(&g)
        })
    }

    fn write_similarity(&self, g: &SimilarityGraph) -> AppResult<()> {
        let p = self.path(SIMILARITY);
        write_similarity_csv(create(&p)?, g).at(&p)
    }

    fn load_records(&self) -> AppResult<Vec<SongRecord>> {
        let p = self.path(RECORDS);
        read_records(open(&p, "ingest")?).map_err(|e| AppError::Data(format!("{}: {e}", p.display())))
    }

    pub fn load_similarity(&self) -> AppResult<SimilarityGraph> {
        let p = self.path(SIMILARITY);
        let parsed = parse_similarity_csv(open(&p, "groundtruth")?).map_err(|e| AppError::Data(format!("{}: {e}", p.display())))?;
        Ok(parsed.items)
    }

    pub fn load_features(&self, scheme: FeatureScheme) -> AppResult<FeatureMatrix> {
        let p = self.path(&features_file(scheme));
        read_features(open(&p, "features")?).map_err(|e| format_error(&p, e))
    }

    pub fn features(&mut self, scheme: FeatureScheme) -> AppResult<bool> {
        let inputs = [self.internal(RECORDS, "ingest")];
        let outputs = vec![scheme_model_file(scheme).to_string(), features_file(scheme)];
        let params = match scheme {
            FeatureScheme::Tfidf => json!({"tfidf": self.cfg.tfidf, "seed": self.cfg.seed}),
            FeatureScheme::Embed => json!({"embed": self.cfg.skipgram()}),
        };
        self.run_stage(format!("features[{scheme}]"), "features", &inputs, params, &outputs, |ws| {
            let records = ws.load_records()?;
            let fm = match scheme {
                FeatureScheme::Tfidf => {
                    let docs = build_documents(&records);
                    let vocab = fit_vocabulary(&docs, ws.cfg.tfidf.max_terms)?;
                    let m = tfidf_transform(&docs, &vocab);
                    let k = ws.cfg.tfidf.k.min(m.n_docs()).min(m.n_terms());
                    if k < ws.cfg.tfidf.k {
                        log::warn!("features[tfidf]: k clipped from {} to {k}", ws.cfg.tfidf.k);
                    }
                    let svd = fit_truncated_svd(&m, k, ws.cfg.seed)?;
                    let fm = project_features(&m, &svd, records.iter().map(|r| r.song_id).collect())?;
                    let p = ws.path(scheme_model_file(scheme));
                    write_tfidf_model(create(&p)?, &TfidfModel { vocab, svd }).at(&p)?;
                    fm
                }
                FeatureScheme::Embed => {
                    let corpus = build_corpus(&records);
                    let emb = train_skipgram(&corpus, &ws.cfg.skipgram())?;
                    let p = ws.path(scheme_model_file(scheme));
                    write_embedding(create(&p)?, &emb).at(&p)?;
                    build_feature_matrix_embed(&records, &emb)?
                }
            };
            let p = ws.path(&features_file(scheme));
            write_features(create(&p)?, &fm).at(&p)
        })
    }

    pub fn pairs(&mut self, scheme: FeatureScheme, threshold: f64) -> AppResult<bool> {
        let inputs = [self.internal(SIMILARITY, "groundtruth"), self.internal(&features_file(scheme), "features")];
        let outputs = vec![pairs_file(scheme, threshold), dataset_file(scheme, threshold)];
        let provenance = Provenance {
            scheme,
            threshold,
            limit: self.cfg.limit,
            both_orientations: self.cfg.both_orientations,
            test_fraction: self.cfg.test_fraction,
            split_seed: self.cfg.seed,
        };
        let params = json!(provenance);
        let name = format!("pairs[{scheme},{}]", threshold_label(threshold));
        self.run_stage(name, "pairs", &inputs, params, &outputs, |ws| {
            let g = filter_graph(&ws.load_similarity()?, SimilarityThreshold::new(threshold)?);
            let fm = ws.load_features(scheme)?;
            let selected = select_pairs(&g, provenance.limit)?;
            let ds = build_pair_matrix(&selected, &fm, provenance.both_orientations)?.split(provenance.test_fraction, provenance.split_seed)?;
            let scaler = ds.fit_scaler()?;
            log::info!("pairs[{scheme},{}]: {} rows from {} edges", threshold_label(threshold), ds.len(), g.edge_count());
            let p = ws.path(&pairs_file(scheme, threshold));
            write_pairs_csv(create(&p)?, &ds.pairs, &ds.y).at(&p)?;
            let p = ws.path(&dataset_file(scheme, threshold));
            write_dataset(create(&p)?, &DatasetArtifact::new(&ds, provenance, scaler)).map_err(|e| AppError::Data(format!("{}: {e}", p.display())))
        })
    }

    pub fn load_dataset(&self, scheme: FeatureScheme, threshold: f64) -> AppResult<DatasetArtifact> {
        let p = self.path(&dataset_file(scheme, threshold));
        read_dataset(open(&p, "pairs")?).map_err(|e| AppError::Data(format!("{}: {e}", p.display())))
    }

    pub fn train(&mut self, scheme: FeatureScheme, threshold: f64, entry: &ModelEntry) -> AppResult<bool> {
        let inputs = [self.internal(&dataset_file(scheme, threshold), "pairs")];
        let model = model_file(scheme, threshold, &entry.name);
        let outputs = vec![model.clone()];
        let params = json!({"entry": entry, "grid": entry.grid(self.cfg.seed), "folds": self.cfg.cv_folds, "seed": self.cfg.seed});
        let name = format!("train[{scheme},{},{}]", threshold_label(threshold), entry.name);
        self.run_stage(name, "train", &inputs, params, &outputs, |ws| {
            let ds = ws.load_dataset(scheme, threshold)?;
            let (artifact, secs) = train_entry(&ds, entry, ws.cfg.cv_folds, ws.cfg.seed);
            let p = ws.path(&model);
            write_model(create(&p)?, &artifact).map_err(|e| AppError::Data(format!("{}: {e}", p.display())))?;
            let t = ws.path(&timing_file(&model));
            fs::write(&t, format!("{secs}\n")).at(&t)
        })
    }

    fn cell_report(&self, scheme: FeatureScheme, threshold: f64, entry: &ModelEntry) -> AppResult<EvalReport> {
        let ds_path = self.path(&dataset_file(scheme, threshold));
        if !ds_path.exists() {
            return Ok(EvalReport::failed(scheme, threshold, entry, "no dataset (pairs stage failed)"));
        }
        let model_path = self.path(&model_file(scheme, threshold, &entry.name));
        if !model_path.exists() {
            return Ok(EvalReport::failed(scheme, threshold, entry, "no trained model"));
        }
        let ds = self.load_dataset(scheme, threshold)?;
        let m = read_model(open(&model_path, "train")?).map_err(|e| AppError::Data(format!("{}: {e}", model_path.display())))?;
        let mut r = score_cell(&ds, entry, &m);
        r.fit_seconds = fs::read_to_string(self.path(&timing_file(&model_file(scheme, threshold, &entry.name))))
            .ok()
            .and_then(|s| s.trim().parse().ok());
        Ok(r)
    }

    fn cells(&self) -> Vec<(FeatureScheme, f64)> {
        let mut out = Vec::new();
        for &s in &self.cfg.schemes {
            for &t in &self.cfg.thresholds {
                out.push((s, t));
            }
        }
        out
    }

    /// Scores every configured cell and writes `reports.csv` and `tables.txt`.
    pub fn evaluate(&mut self) -> AppResult<Vec<EvalReport>> {
        let mut inputs = Vec::new();
        for (s, t) in self.cells() {
            let ds = self.internal(&dataset_file(s, t), "pairs");
            if ds.path.exists() {
                inputs.push(ds);
            }
            for e in &self.cfg.models {
                let m = self.internal(&model_file(s, t, &e.name), "train");
                if m.path.exists() {
                    inputs.push(m);
                }
            }
        }
        let params = json!({"schemes": self.cfg.schemes, "thresholds": self.cfg.thresholds, "models": self.cfg.models});
        let outputs = vec![REPORTS.to_string(), TABLES.to_string()];
        let mut reports = Vec::new();
        self.run_stage("evaluate".into(), "evaluate", &inputs, params, &outputs, |ws| {
            for (s, t) in ws.cells() {
                for e in &ws.cfg.models {
                    reports.push(ws.cell_report(s, t, e)?);
                }
            }
            let p = ws.path(REPORTS);
            write_reports(create(&p)?, &reports).map_err(|e| AppError::Data(format!("{}: {e}", p.display())))?;
            let p = ws.path(TABLES);
            fs::write(&p, render_tables(&reports)).at(&p)?;
            let p = ws.path(TIMINGS);
            write_timings(create(&p)?, &reports).map_err(|e| AppError::Data(format!("{}: {e}", p.display())))
        })?;
        if reports.is_empty() {
            let p = self.path(REPORTS);
            reports = crate::eval::read_reports(open(&p, "evaluate")?).map_err(|e| AppError::Data(format!("{}: {e}", p.display())))?;
        }
        Ok(reports)
    }

    /// Pair building for every configured cell. A failing cell is logged and
    /// later shows up as a failed report.
    pub fn all_pairs(&mut self) -> AppResult<()> {
        for (s, t) in self.cells() {
            match self.pairs(s, t) {
                Ok(_) => {}
                Err(AppError::Stage { stage, source }) if matches!(*source, AppError::Core(_)) => {
                    log::warn!("{stage}[{s},{}] failed: {source}", threshold_label(t));
                }
                Err(e) => return Err(e),
            }
        }
        Ok(())
    }

    pub fn all_training(&mut self) -> AppResult<()> {
        let models = self.cfg.models.clone();
        for (s, t) in self.cells() {
            if !self.path(&dataset_file(s, t)).exists() {
                continue;
            }
            for e in &models {
                self.train(s, t, e)?;
            }
        }
        Ok(())
    }

    /// Every stage in order.
    pub fn run_all(&mut self) -> AppResult<Vec<EvalReport>> {
        self.ingest()?;
        self.groundtruth()?;
        for s in self.cfg.schemes.clone() {
            self.features(s)?;
        }
        self.all_pairs()?;
        self.all_training()?;
        self.evaluate()
    }
}
