//! Readers and writers for the input files and the id maps.

pub mod histories;
pub mod idmap;
pub mod records;
pub mod similarity;
pub mod songs;

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use crate::error::{AppError, AppResult, IoContext};

/// A rejected input line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineIssue {
    pub line: usize,
    pub message: String,
}

/// Items parsed from a file plus the lines that were skipped.
#[derive(Debug, Clone, PartialEq)]
pub struct Parsed<T> {
    pub items: T,
    pub issues: Vec<LineIssue>,
}

impl<T> Parsed<T> {
    pub fn log_issues(&self, source: &Path) {
        for issue in self.issues.iter().take(20) {
            log::warn!("{}:{}: {}", source.display(), issue.line, issue.message);
        }
        if self.issues.len() > 20 {
            log::warn!("{}: {} more rejected lines", source.display(), self.issues.len() - 20);
        }
    }
}

pub fn open(path: &Path, stage: &'static str) -> AppResult<BufReader<File>> {
    match File::open(path) {
        Ok(f) => Ok(BufReader::new(f)),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Err(AppError::MissingArtifact {
            path: path.to_path_buf(),
            stage,
        }),
        Err(e) => Err(AppError::io(path, e)),
    }
}

pub fn create(path: &Path) -> AppResult<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).at(dir)?;
    }
    File::create(path).map(BufWriter::new).at(path)
}

/// Seventeen significant digits, enough for an exact `f64` round trip.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}
