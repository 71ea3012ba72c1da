use std::collections::BTreeMap;
use std::path::Path;

use songsim::config::{ModelEntry, RunConfig, TfidfConfig};
use songsim::eval::read_reports;
use songsim::pipeline::{Workspace, REPORTS, TABLES};
use songsim::synth::{generate, write_corpus, SynthSpec};
use songsim_core::embed::SkipGramParams;
use songsim_core::models::{Kernel, ModelSpec, SvrParams};
use songsim_core::FeatureScheme;

fn small_spec(seed: u64) -> SynthSpec {
    SynthSpec {
        n_songs: 240,
        n_users: 120,
        n_genres: 4,
        tags_per_genre: 8,
        noise: 0.1,
        seed,
    }
}

fn small_config(dir: &Path) -> RunConfig {
    RunConfig {
        workdir: dir.to_path_buf(),
        seed: 3,
        thresholds: vec![0.0, 0.05],
        limit: 300,
        tfidf: TfidfConfig { max_terms: 500, k: 16 },
        embed: SkipGramParams {
            dim: 12,
            epochs: 2,
            ..SkipGramParams::default()
        },
        models: vec![
            ModelEntry::single("svr-rbf", ModelSpec::Svr(SvrParams::new(Kernel::Rbf { gamma: 0.1 }, 1.0))),
            ModelEntry::single("knn-5", ModelSpec::Knn { k: 5 }),
            ModelEntry::single("ols", ModelSpec::Ols),
        ],
        ..RunConfig::default()
    }
}

fn prepared(seed: u64) -> (tempfile::TempDir, RunConfig) {
    let dir = tempfile::tempdir().unwrap();
    let corpus = generate(&small_spec(seed)).unwrap();
    write_corpus(&corpus, dir.path()).unwrap();
    let cfg = small_config(dir.path());
    (dir, cfg)
}

fn computed(ws: &Workspace) -> BTreeMap<String, bool> {
    ws.runs().iter().map(|r| (r.name.clone(), r.computed)).collect()
}

#[test]
fn full_run_then_rerun_hits_the_cache() {
    let (_dir, cfg) = prepared(1);
    let mut ws = Workspace::open(cfg.clone(), false).unwrap();
    let reports = ws.run_all().unwrap();
    assert_eq!(reports.len(), 2 * 2 * 3);
    assert!(reports.iter().all(|r| r.is_ok()), "{reports:#?}");
    assert!(computed(&ws).values().all(|&c| c));
    drop(ws);

    let mut ws = Workspace::open(cfg, false).unwrap();
    let again = ws.run_all().unwrap();
    let runs = computed(&ws);
    assert!(runs.values().all(|&c| !c), "{runs:?}");
    let strip = |v: &[songsim::eval::EvalReport]| v.iter().map(|r| (r.experiment_id.clone(), r.r2, r.status.clone())).collect::<Vec<_>>();
    assert_eq!(strip(&again), strip(&reports));
}

#[test]
fn changing_the_threshold_recomputes_pairs_onward_only() {
    let (_dir, mut cfg) = prepared(2);
    cfg.schemes = vec![FeatureScheme::Tfidf];
    Workspace::open(cfg.clone(), false).unwrap().run_all().unwrap();

    cfg.thresholds = vec![0.0, 0.1];
    let mut ws = Workspace::open(cfg, false).unwrap();
    ws.run_all().unwrap();
    let runs = computed(&ws);
    for upstream in ["ingest", "groundtruth", "features[tfidf]", "pairs[tfidf,t0]", "train[tfidf,t0,knn-5]"] {
        assert!(!runs[upstream], "{upstream} should be cached");
    }
    for downstream in ["pairs[tfidf,t0.1]", "train[tfidf,t0.1,knn-5]", "train[tfidf,t0.1,ols]", "evaluate"] {
        assert!(runs[downstream], "{downstream} should be recomputed");
    }
}

#[test]
fn fresh_workdirs_give_identical_reports() {
    let (a, cfg_a) = prepared(4);
    let (b, cfg_b) = prepared(4);
    Workspace::open(cfg_a, false).unwrap().run_all().unwrap();
    Workspace::open(cfg_b, false).unwrap().run_all().unwrap();
    let ra = std::fs::read(a.path().join(REPORTS)).unwrap();
    let rb = std::fs::read(b.path().join(REPORTS)).unwrap();
    assert_eq!(ra, rb);
}

#[test]
fn tables_agree_with_reports() {
    let (dir, cfg) = prepared(5);
    Workspace::open(cfg, false).unwrap().run_all().unwrap();
    let reports = read_reports(std::fs::File::open(dir.path().join(REPORTS)).unwrap()).unwrap();
    let tables = std::fs::read_to_string(dir.path().join(TABLES)).unwrap();
    for r in &reports {
        assert!(tables.contains(&format!("{:.3}", r.r2.unwrap())), "{} missing from tables", r.experiment_id);
    }
    for heading in ["SVR", "k-NN", "Linear regression"] {
        assert!(tables.contains(heading));
    }
}

#[test]
fn an_empty_threshold_cell_is_reported_and_the_run_continues() {
    let (_dir, mut cfg) = prepared(6);
    cfg.schemes = vec![FeatureScheme::Tfidf];
    cfg.thresholds = vec![0.0, 0.999];
    let reports = Workspace::open(cfg, false).unwrap().run_all().unwrap();
    let (bad, good): (Vec<_>, Vec<_>) = reports.iter().partition(|r| r.threshold == 0.999);
    assert!(bad.iter().all(|r| r.status.starts_with("error")));
    assert!(good.iter().all(|r| r.is_ok()));
}

#[test]
fn external_similarity_file_replaces_histories() {
    let (dir, mut cfg) = prepared(7);
    let sim = dir.path().join("given.csv");
    let rows: String = (0..60).map(|i| format!("{i},{},{}\n", i + 1, 0.2 + (i % 5) as f64 / 10.0)).collect();
    std::fs::write(&sim, rows).unwrap();
    std::fs::remove_file(dir.path().join("histories.csv")).unwrap();
    cfg.similarity = Some(sim);
    cfg.schemes = vec![FeatureScheme::Tfidf];
    cfg.thresholds = vec![0.0];
    let reports = Workspace::open(cfg, false).unwrap().run_all().unwrap();
    assert!(reports.iter().all(|r| r.is_ok() && r.n_train + r.n_test == 60), "{reports:#?}");
}

#[test]
fn within_genre_similarity_exceeds_cross_genre() {
    for seed in [11, 12] {
        let spec = SynthSpec {
            n_songs: 300,
            n_users: 150,
            ..small_spec(seed)
        };
        let corpus = generate(&spec).unwrap();
        let index: BTreeMap<&str, u32> = corpus.songs.iter().enumerate().map(|(i, s)| (s.mbid.as_str(), i as u32)).collect();
        let mut by_user: BTreeMap<&str, Vec<u32>> = BTreeMap::new();
        for (u, m) in &corpus.listens {
            let list = by_user.entry(u.as_str()).or_default();
            if !list.contains(&index[m.as_str()]) {
                list.push(index[m.as_str()]);
            }
        }
        let histories: Vec<Vec<u32>> = by_user.into_values().collect();
        let sims = songsim_oracles::incidence_cosine(&histories);
        let (mut within, mut cross) = ((0.0, 0usize), (0.0, 0usize));
        let n = corpus.songs.len() as u32;
        for a in 0..n {
            for b in a + 1..n {
                let s = sims.get(&(a, b)).copied().unwrap_or(0.0);
                let acc = if corpus.genres[a as usize] == corpus.genres[b as usize] { &mut within } else { &mut cross };
                acc.0 += s;
                acc.1 += 1;
            }
        }
        let (w, c) = (within.0 / within.1 as f64, cross.0 / cross.1 as f64);
        assert!(w > c, "seed {seed}: within {w} vs cross {c}");
    }
}
