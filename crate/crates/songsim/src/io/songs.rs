//! `songs.jsonl`: one metadata object per line.

use std::io::{BufRead, Write};

use serde::Deserialize;
use songsim_core::ingest::{RawSongDoc, MAX_TAG_COUNT};

use super::{LineIssue, Parsed};

#[derive(Deserialize)]
struct WireDoc {
    #[serde(default)]
    name: String,
    #[serde(default)]
    tags: Vec<(String, f64)>,
    #[serde(default)]
    album_mbid: String,
    #[serde(default)]
    artist_name: String,
    mbid: String,
    #[serde(default)]
    album_title: String,
    #[serde(default)]
    artist_mbid: String,
}

fn clamp_count(c: f64) -> u32 {
    if c.is_nan() {
        return 0;
    }
    c.round().clamp(0.0, f64::from(MAX_TAG_COUNT)) as u32
}

/// Parses documents in file order. Blank lines are ignored; malformed lines
/// are skipped and reported with their 1-based line number. Tag counts are
/// clamped into `0..=100`.
pub fn parse_song_docs<R: BufRead>(reader: R) -> std::io::Result<Parsed<Vec<RawSongDoc>>> {
    let mut items = Vec::new();
    let mut issues = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let doc: WireDoc = match serde_json::from_str(&line) {
            Ok(d) => d,
            Err(e) => {
                issues.push(LineIssue { line: i + 1, message: e.to_string() });
                continue;
            }
        };
        if doc.mbid.is_empty() {
            issues.push(LineIssue {
                line: i + 1,
                message: "empty mbid".into(),
            });
            continue;
        }
        items.push(RawSongDoc {
            name: doc.name,
            tags: doc.tags.into_iter().map(|(t, c)| (t, clamp_count(c))).collect(),
            album_mbid: doc.album_mbid,
            artist_name: doc.artist_name,
            mbid: doc.mbid,
            album_title: doc.album_title,
            artist_mbid: doc.artist_mbid,
        });
    }
    Ok(Parsed { items, issues })
}

pub fn write_song_docs<W: Write>(mut w: W, docs: &[RawSongDoc]) -> std::io::Result<()> {
    for d in docs {
        serde_json::to_writer(&mut w, d)?;
        w.write_all(b"\n")?;
    }
    w.flush()
}
