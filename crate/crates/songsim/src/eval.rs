//! Experiment cells: training one model entry on one dataset, scoring it on
//! the held-out rows, and rendering the results as CSV and text tables.

use std::fmt::Write as _;
use std::io::{Read, Write};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use songsim_core::metrics::{r2_score, rmse};
use songsim_core::models::{grid_search, GridSpec, Regressor};
use songsim_core::FeatureScheme;

use crate::config::ModelEntry;
use crate::formats::dataset::DatasetArtifact;
use crate::formats::model::{ModelArtifact, TrainResult};
use crate::io::fmt_f64;

/// Grid-searches `entry` on the training rows of `ds`. Failures are captured
/// in the artifact rather than returned. Also returns the elapsed seconds.
pub fn train_entry(ds: &DatasetArtifact, entry: &ModelEntry, folds: usize, seed: u64) -> (ModelArtifact, f64) {
    let start = Instant::now();
    let scaled = entry.scaled();
    let result = (|| {
        let data = ds.to_dataset();
        let (mut x, y) = data.train().expect("artifact datasets are split");
        if scaled {
            x = ds.scaler.apply(&x)?;
        }
        let grid = GridSpec {
            candidates: entry.grid(seed),
            folds,
            seed,
        };
        let r = grid_search(&grid, &x, &y)?;
        Ok::<_, songsim_core::Error>(TrainResult::Trained {
            scaler: scaled.then(|| ds.scaler.clone()),
            best: r.best,
            best_index: r.best_index,
            cv: r.table,
            model: r.model,
        })
    })()
    .unwrap_or_else(|e| TrainResult::Failed { error: e.to_string() });
    let artifact = ModelArtifact {
        entry: entry.name.clone(),
        scheme: ds.provenance.scheme,
        threshold: ds.provenance.threshold,
        folds,
        cv_seed: seed,
        result,
    };
    (artifact, start.elapsed().as_secs_f64())
}

/// One cell of the experiment matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub experiment_id: String,
    pub scheme: FeatureScheme,
    pub threshold: f64,
    pub entry: String,
    pub family: String,
    /// Hyperparameters of the selected candidate.
    pub params: String,
    pub scaled: bool,
    pub n_train: usize,
    pub n_test: usize,
    pub r2: Option<f64>,
    pub rmse: Option<f64>,
    pub cv_mean: Option<f64>,
    /// Population standard deviation of the fold scores.
    pub cv_std: Option<f64>,
    /// `ok` or the failure message.
    pub status: String,
    /// Wall-clock training time. Kept out of `reports.csv` so that file is
    /// reproducible byte for byte.
    #[serde(skip)]
    pub fit_seconds: Option<f64>,
}

pub fn threshold_label(t: f64) -> String {
    format!("t{t}")
}

pub fn experiment_id(scheme: FeatureScheme, threshold: f64, entry: &str) -> String {
    format!("{scheme}/{}/{entry}", threshold_label(threshold))
}

impl EvalReport {
    pub fn failed(scheme: FeatureScheme, threshold: f64, entry: &ModelEntry, error: impl Into<String>) -> Self {
        EvalReport {
            experiment_id: experiment_id(scheme, threshold, &entry.name),
            scheme,
            threshold,
            entry: entry.name.clone(),
            family: entry.family().into(),
            params: String::new(),
            scaled: entry.scaled(),
            n_train: 0,
            n_test: 0,
            r2: None,
            rmse: None,
            cv_mean: None,
            cv_std: None,
            status: format!("error: {}", error.into()),
            fit_seconds: None,
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

/// Scores a trained entry on the test rows of its dataset.
pub fn score_cell(ds: &DatasetArtifact, entry: &ModelEntry, m: &ModelArtifact) -> EvalReport {
    let (scheme, threshold) = (ds.provenance.scheme, ds.provenance.threshold);
    let TrainResult::Trained { scaler, best, best_index, cv, model } = &m.result else {
        let TrainResult::Failed { error } = &m.result else { unreachable!() };
        return EvalReport::failed(scheme, threshold, entry, error.clone());
    };
    let data = ds.to_dataset();
    let split = data.split.as_ref().expect("artifact datasets are split");
    let (x, y) = data.test().expect("artifact datasets are split");
    let scored = (|| {
        let x = match scaler {
            Some(s) => s.apply(&x)?,
            None => x,
        };
        let pred = model.predict(&x)?;
        Ok::<_, songsim_core::Error>((r2_score(&y, &pred)?, rmse(&y, &pred)?))
    })();
    let best_cv = &cv[*best_index];
    let mut report = EvalReport {
        experiment_id: experiment_id(scheme, threshold, &entry.name),
        scheme,
        threshold,
        entry: entry.name.clone(),
        family: best.family().into(),
        params: best.describe(),
        scaled: scaler.is_some(),
        n_train: split.train.len(),
        n_test: split.test.len(),
        r2: None,
        rmse: None,
        cv_mean: Some(best_cv.mean),
        cv_std: Some(best_cv.std),
        status: "ok".into(),
        fit_seconds: None,
    };
    match scored {
        Ok((r2, e)) => {
            report.r2 = Some(r2);
            report.rmse = Some(e);
        }
        Err(e) => report.status = format!("error: {e}"),
    }
    report
}

/// Runs every `(dataset, entry)` cell in memory, datasets first, entries in
/// declared order. A dataset that failed to build yields failed reports.
pub fn run_experiment_matrix(
    datasets: &[(FeatureScheme, f64, Result<DatasetArtifact, String>)],
    entries: &[ModelEntry],
    folds: usize,
    seed: u64,
) -> Vec<EvalReport> {
    let mut out = Vec::with_capacity(datasets.len() * entries.len());
    for (scheme, threshold, ds) in datasets {
        for entry in entries {
            out.push(match ds {
                Ok(ds) => {
                    let (m, secs) = train_entry(ds, entry, folds, seed);
                    let mut r = score_cell(ds, entry, &m);
                    r.fit_seconds = Some(secs);
                    r
                }
                Err(e) => EvalReport::failed(*scheme, *threshold, entry, e.clone()),
            });
        }
    }
    out
}

const COLUMNS: [&str; 14] = [
    "experiment_id",
    "scheme",
    "threshold",
    "entry",
    "family",
    "params",
    "scaled",
    "n_train",
    "n_test",
    "r2",
    "rmse",
    "cv_mean",
    "cv_std",
    "status",
];

fn opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

pub fn write_reports<W: Write>(w: W, reports: &[EvalReport]) -> csv::Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(COLUMNS)?;
    for r in reports {
        wtr.write_record([
            r.experiment_id.clone(),
            r.scheme.to_string(),
            fmt_f64(r.threshold),
            r.entry.clone(),
            r.family.clone(),
            r.params.clone(),
            r.scaled.to_string(),
            r.n_train.to_string(),
            r.n_test.to_string(),
            opt(r.r2),
            opt(r.rmse),
            opt(r.cv_mean),
            opt(r.cv_std),
            r.status.clone(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_reports<R: Read>(r: R) -> Result<Vec<EvalReport>, String> {
    let mut rdr = csv::Reader::from_reader(r);
    let headers = rdr.headers().map_err(|e| e.to_string())?.clone();
    if !headers.iter().eq(COLUMNS) {
        return Err("unexpected reports.csv header".into());
    }
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| e.to_string())?;
        let bad = |field: &str| format!("row {}: bad {field}", i + 2);
        let num = |j: usize| -> Result<Option<f64>, String> {
            match &rec[j] {
                "" => Ok(None),
                s => s.parse().map(Some).map_err(|_| bad(COLUMNS[j])),
            }
        };
        out.push(EvalReport {
            experiment_id: rec[0].to_string(),
            scheme: rec[1].parse().map_err(|_| bad("scheme"))?,
            threshold: rec[2].parse().map_err(|_| bad("threshold"))?,
            entry: rec[3].to_string(),
            family: rec[4].to_string(),
            params: rec[5].to_string(),
            scaled: rec[6].parse().map_err(|_| bad("scaled"))?,
            n_train: rec[7].parse().map_err(|_| bad("n_train"))?,
            n_test: rec[8].parse().map_err(|_| bad("n_test"))?,
            r2: num(9)?,
            rmse: num(10)?,
            cv_mean: num(11)?,
            cv_std: num(12)?,
            status: rec[13].to_string(),
            fit_seconds: None,
        });
    }
    Ok(out)
}

pub fn write_timings<W: Write>(w: W, reports: &[EvalReport]) -> csv::Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["experiment_id", "fit_seconds"])?;
    for r in reports {
        wtr.write_record([r.experiment_id.clone(), r.fit_seconds.map(|s| format!("{s:.3}")).unwrap_or_default()])?;
    }
    wtr.flush()?;
    Ok(())
}

fn scheme_title(s: FeatureScheme) -> &'static str {
    match s {
        FeatureScheme::Tfidf => "Tf-idf",
        FeatureScheme::Embed => "Word2Vec",
    }
}

fn row_label(scheme: FeatureScheme, threshold: f64) -> String {
    if threshold == 0.0 {
        format!("{} raw", scheme_title(scheme))
    } else {
        format!("{} s >= {threshold}", scheme_title(scheme))
    }
}

fn family_title(family: &str) -> &'static str {
    match family {
        "svr" => "SVR: test R2 of the best cross-validated model",
        "knn" => "k-NN: test R2",
        "lsh" => "Approximate k-NN (LSH forest): test R2",
        "ols" => "Linear regression: test R2 and CV R2 mean (+/- std)",
        _ => "Other models: test R2",
    }
}

fn render_grid(out: &mut String, header: &[String], rows: &[Vec<String>]) {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for r in rows {
        for (w, c) in widths.iter_mut().zip(r) {
            *w = (*w).max(c.chars().count());
        }
    }
    let line = |cells: &[String]| -> String {
        let padded: Vec<String> = cells.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
        padded.join(" | ").trim_end().to_string()
    };
    let _ = writeln!(out, "{}", line(header));
    let _ = writeln!(out, "{}", widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().join("-+-"));
    for r in rows {
        let _ = writeln!(out, "{}", line(r));
    }
}

/// Plain-text tables, one per model family: rows are scheme x threshold,
/// columns are the family's entries, cells hold test R². The best cell of a
/// table is marked with `*`.
pub fn render_tables(reports: &[EvalReport]) -> String {
    let mut cells: Vec<(FeatureScheme, f64)> = Vec::new();
    let mut families: Vec<&str> = Vec::new();
    for r in reports {
        if !cells.contains(&(r.scheme, r.threshold)) {
            cells.push((r.scheme, r.threshold));
        }
        if !families.contains(&r.family.as_str()) {
            families.push(&r.family);
        }
    }
    let mut out = String::new();
    for family in families {
        let mut entries: Vec<&str> = Vec::new();
        for r in reports.iter().filter(|r| r.family == family) {
            if !entries.contains(&r.entry.as_str()) {
                entries.push(&r.entry);
            }
        }
        let of_family: Vec<&EvalReport> = reports.iter().filter(|r| r.family == family).collect();
        let best = of_family
            .iter()
            .filter_map(|r| r.r2.map(|v| (v, r.experiment_id.as_str())))
            .fold(None, |acc: Option<(f64, &str)>, (v, id)| match acc {
                Some((b, _)) if b >= v => acc,
                _ => Some((v, id)),
            });
        let cell_text = |r: &EvalReport| -> String {
            match r.r2 {
                Some(v) => {
                    let star = if best.map(|b| b.1) == Some(r.experiment_id.as_str()) { "*" } else { "" };
                    format!("{v:.3}{star}")
                }
                None => "error".into(),
            }
        };
        let mut header = vec![String::new()];
        for e in &entries {
            header.push((*e).to_string());
            if family == "ols" {
                header.push(format!("{e} CV"));
            }
        }
        let mut rows = Vec::new();
        for &(scheme, threshold) in &cells {
            let mut row = vec![row_label(scheme, threshold)];
            for e in &entries {
                let r = of_family.iter().find(|r| r.scheme == scheme && r.threshold == threshold && r.entry == *e);
                row.push(r.map_or("-".into(), |r| cell_text(r)));
                if family == "ols" {
                    row.push(r.and_then(|r| Some(format!("{:.3} (+/- {:.3})", r.cv_mean?, r.cv_std?))).unwrap_or("-".into()));
                }
            }
            rows.push(row);
        }
        let _ = writeln!(out, "{}", family_title(family));
        render_grid(&mut out, &header, &rows);
        out.push('\n');
    }
    out
}
