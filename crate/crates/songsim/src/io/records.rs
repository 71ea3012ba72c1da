//! `records.jsonl`: normalized song records, one per line.

use std::io::{BufRead, Write};

use songsim_core::ingest::SongRecord;

pub fn write_records<W: Write>(mut w: W, records: &[SongRecord]) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

pub fn read_records<R: BufRead>(r: R) -> Result<Vec<SongRecord>, String> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line.map_err(|e| e.to_string())?;
        if line.is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| format!("line {}: {e}", i + 1))?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use songsim_core::ingest::{build_song_records, RawSongDoc};

    proptest! {
        #[test]
        fn serialize_then_parse_is_identity(
            names in proptest::collection::vec(("\\PC{0,12}", "\\PC{0,8}", proptest::collection::vec(("\\PC{1,6}", 0u32..=100), 0..4)), 0..6)
        ) {
            let docs: Vec<RawSongDoc> = names
                .into_iter()
                .enumerate()
                .map(|(i, (name, artist, tags))| RawSongDoc {
                    name,
                    tags,
                    album_mbid: format!("al{}", i % 2),
                    artist_name: artist,
                    mbid: format!("m{i}"),
                    album_title: String::new(),
                    artist_mbid: format!("ar{}", i % 3),
                })
                .collect();
            let (records, _) = build_song_records(&docs);
            let mut buf = Vec::new();
            write_records(&mut buf, &records).unwrap();
            prop_assert_eq!(read_records(buf.as_slice()).unwrap(), records);
        }
    }
}
