use std::path::Path;
use std::process::{Command, Output};

fn songsim(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_songsim"))
        .arg("--workdir")
        .arg(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SMALL: &[&str] = &["synth", "--songs", "120", "--users", "60", "--genres", "3", "--tags-per-genre", "6"];

fn write_config(dir: &Path) -> String {
    let path = dir.join("run.toml");
    std::fs::write(
        &path,
        r#"
limit = 150
[tfidf]
k = 8
[embed]
dim = 8
epochs = 1
[[models]]
name = "knn-3"
candidates = [{ family = "knn", k = 3 }]
[[models]]
name = "ols"
candidates = [{ family = "ols" }]
"#,
    )
    .unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn synth_is_byte_reproducible() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    assert!(songsim(a.path(), SMALL).status.success());
    assert!(songsim(b.path(), SMALL).status.success());
    for f in ["songs.jsonl", "histories.csv"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap());
    }
}

#[test]
fn stages_run_one_at_a_time() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path());
    let run = |args: &[&str]| {
        let mut full = vec!["--config", cfg.as_str()];
        full.extend_from_slice(args);
        songsim(dir.path(), &full)
    };
    assert!(run(SMALL).status.success());

    let o = run(&["train"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("dataset_tfidf_t0.json") && stderr(&o).contains("pairs"), "{}", stderr(&o));

    assert!(run(&["ingest"]).status.success());
    let o = run(&["features", "--scheme", "tfidf"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(dir.path().join("features_tfidf.txt").exists());
    assert!(!dir.path().join("features_embed.txt").exists());

    let o = run(&["pairs", "--scheme", "tfidf"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("similarity.csv"));

    for stage in [&["groundtruth"][..], &["pairs", "--scheme", "tfidf"], &["train", "--scheme", "tfidf"], &["evaluate", "--scheme", "tfidf"]] {
        let o = run(stage);
        assert!(o.status.success(), "{stage:?}: {}", stderr(&o));
    }
    let o = run(&["pipeline", "--scheme", "tfidf"]);
    let out = String::from_utf8_lossy(&o.stdout);
    assert!(o.status.success());
    assert!(out.lines().filter(|l| l.contains("computed")).count() == 0, "{out}");
    assert!(dir.path().join("tables.txt").exists());
}

#[test]
fn usage_errors_exit_with_1() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(songsim(dir.path(), &["frobnicate"]).status.code(), Some(1));
    assert_eq!(songsim(dir.path(), &["pipeline", "--scheme", "bag-of-words"]).status.code(), Some(1));
    assert_eq!(songsim(dir.path(), &["pipeline", "--threshold", "1.5"]).status.code(), Some(1));
    assert_eq!(songsim(dir.path(), &["synth", "--noise", "2"]).status.code(), Some(1));
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "seeds = 3").unwrap();
    assert_eq!(songsim(dir.path(), &["--config", bad.to_str().unwrap(), "ingest"]).status.code(), Some(1));
}

#[test]
fn data_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = songsim(dir.path(), &["ingest"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("songs.jsonl"));
    std::fs::write(dir.path().join("songs.jsonl"), "not json\n{\"also\": \"wrong\"}\n").unwrap();
    std::fs::write(dir.path().join("histories.csv"), "user_id,song_mbid\n").unwrap();
    let o = songsim(dir.path(), &["ingest"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn stage_failures_exit_with_3() {
    let dir = tempfile::tempdir().unwrap();
    assert!(songsim(dir.path(), SMALL).status.success());
    // histories in which nobody listened to two songs: empty ground truth
    let songs = std::fs::read_to_string(dir.path().join("songs.jsonl")).unwrap();
    let first: serde_json::Value = serde_json::from_str(songs.lines().next().unwrap()).unwrap();
    std::fs::write(dir.path().join("histories.csv"), format!("user_id,song_mbid\nu1,{}\n", first["mbid"].as_str().unwrap())).unwrap();
    for stage in ["ingest", "groundtruth", "features"] {
        assert!(songsim(dir.path(), &[stage, "--scheme", "tfidf"]).status.success());
    }
    let o = songsim(dir.path(), &["pairs", "--scheme", "tfidf"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("pairs"));
}

#[test]
fn a_locked_workdir_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join(".songsim.lock"), "1").unwrap();
    let o = songsim(dir.path(), &["ingest"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("locked"));
}
