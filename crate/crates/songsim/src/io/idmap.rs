//! `idmap_<namespace>.tsv`: `mbid<TAB>id` per line, ids ascending.

use std::io::{BufRead, Write};

use songsim_core::ingest::IdAssigner;

pub fn write_idmap<W: Write>(mut w: W, ids: &IdAssigner) -> std::io::Result<()> {
    for (key, id) in ids.iter() {
        writeln!(w, "{key}\t{id}")?;
    }
    w.flush()
}

/// Ids must appear as `0, 1, 2, ...`.
pub fn read_idmap<R: BufRead>(r: R) -> Result<IdAssigner, String> {
    let mut ids = IdAssigner::new();
    for (i, line) in r.lines().enumerate() {
        let line = line.map_err(|e| e.to_string())?;
        let (key, id) = line
            .split_once('\t')
            .ok_or_else(|| format!("line {}: expected `mbid<TAB>id`", i + 1))?;
        let id: u32 = id.trim().parse().map_err(|_| format!("line {}: bad id", i + 1))?;
        if ids.assign(key) != id || ids.len() != i + 1 {
            return Err(format!("line {}: ids must be contiguous and keys unique", i + 1));
        }
    }
    Ok(ids)
}
