//! `histories.csv` (`user_id,song_mbid`) and its integer form.

use std::io::{Read, Write};

use songsim_core::ingest::{HistoryBuilder, IdAssigner, UserHistory};

use super::{LineIssue, Parsed};

pub const HEADER: [&str; 2] = ["user_id", "song_mbid"];

#[derive(Debug, Clone, PartialEq)]
pub struct HistoryTable {
    pub histories: Vec<UserHistory>,
    pub users: IdAssigner,
    /// Rows whose song mbid is not in the song id map.
    pub unknown_songs: usize,
}

/// Groups rows by user. Rows naming an unknown song are dropped and counted;
/// malformed rows are skipped and reported.
pub fn parse_histories<R: Read>(reader: R, songs: &IdAssigner) -> csv::Result<Parsed<HistoryTable>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(reader);
    let mut builder = HistoryBuilder::new();
    let mut unknown = 0usize;
    let mut issues = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 1;
        let rec = match rec {
            Ok(r) => r,
            Err(e) if matches!(e.kind(), csv::ErrorKind::Utf8 { .. }) => {
                issues.push(LineIssue { line, message: e.to_string() });
                continue;
            }
            Err(e) => return Err(e),
        };
        if line == 1 && rec.iter().map(str::trim).eq(HEADER) {
            continue;
        }
        let (user, mbid) = match (rec.get(0).map(str::trim), rec.get(1).map(str::trim), rec.len()) {
            (Some(u), Some(m), 2) if !u.is_empty() && !m.is_empty() => (u, m),
            _ => {
                issues.push(LineIssue {
                    line,
                    message: format!("expected `user_id,song_mbid`, got {} fields", rec.len()),
                });
                continue;
            }
        };
        match songs.get(mbid) {
            Some(id) => builder.add(user, id),
            None => unknown += 1,
        }
    }
    let (histories, users) = builder.finish();
    Ok(Parsed {
        items: HistoryTable {
            histories,
            users,
            unknown_songs: unknown,
        },
        issues,
    })
}

pub fn write_histories<W: Write>(w: W, rows: &[(String, String)]) -> csv::Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(HEADER)?;
    for (u, m) in rows {
        wtr.write_record([u, m])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Integer histories as `user_id,song_id` rows, users ascending.
pub fn write_user_histories<W: Write>(w: W, histories: &[UserHistory]) -> csv::Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["user_id", "song_id"])?;
    for h in histories {
        for s in &h.song_ids {
            wtr.write_record([h.user_id.to_string(), s.to_string()])?;
        }
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_user_histories<R: Read>(r: R) -> Result<Vec<UserHistory>, String> {
    let mut rdr = csv::Reader::from_reader(r);
    let mut out: Vec<UserHistory> = Vec::new();
    for (i, rec) in rdr.deserialize::<(u32, u32)>().enumerate() {
        let (u, s) = rec.map_err(|e| format!("row {}: {e}", i + 2))?;
        match out.last_mut() {
            Some(h) if h.user_id == u => {
                h.song_ids.insert(s);
            }
            _ => out.push(UserHistory {
                user_id: u,
                song_ids: [s].into_iter().collect(),
            }),
        }
    }
    Ok(out)
}
