//! `similarity.csv`: `song_id,song_id,similarity` rows without a header.

use std::io::{Read, Write};

use songsim_core::cooccur::SimilarityGraph;

use super::{fmt_f64, LineIssue, Parsed};

/// Builds a symmetric graph. Rows with a similarity outside `[0, 1]` or that
/// do not parse are rejected and reported; self-pairs are ignored and a
/// repeated pair keeps its last value. A non-numeric first row is treated as
/// a header.
pub fn parse_similarity_csv<R: Read>(reader: R) -> csv::Result<Parsed<SimilarityGraph>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(reader);
    let mut edges = Vec::new();
    let mut issues = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i + 1;
        let fields: Vec<&str> = rec.iter().map(str::trim).collect();
        let parsed = match fields.as_slice() {
            [a, b, s] => match (a.parse::<u32>(), b.parse::<u32>(), s.parse::<f64>()) {
                (Ok(a), Ok(b), Ok(s)) => Ok((a, b, s)),
                _ => Err("expected `id,id,similarity`".to_string()),
            },
            _ => Err(format!("expected 3 fields, got {}", fields.len())),
        };
        match parsed {
            Ok((a, b, s)) if (0.0..=1.0).contains(&s) => edges.push((a, b, s)),
            Ok((_, _, s)) => issues.push(LineIssue {
                line,
                message: format!("similarity {s} outside [0, 1]"),
            }),
            Err(_) if line == 1 && fields.len() == 3 && fields[2].parse::<f64>().is_err() => {}
            Err(message) => issues.push(LineIssue { line, message }),
        }
    }
    Ok(Parsed {
        items: SimilarityGraph::from_edges(edges),
        issues,
    })
}

/// Writes each undirected edge once, ascending.
pub fn write_similarity_csv<W: Write>(mut w: W, g: &SimilarityGraph) -> std::io::Result<()> {
    for (a, b, s) in g.edges() {
        writeln!(w, "{a},{b},{}", fmt_f64(s))?;
    }
    w.flush()
}
