//! Fitted tf-idf vocabulary plus SVD projection.
//!
//! ```text
//! songsim-tfidf 1
//! params k=2 seed=7 n_docs=40 max_terms=5000 n_terms=3
//! terms
//! 0<TAB>rock<TAB>31<TAB>1.2...e0
//! singular_values 3.1...e0 1.4...e0
//! components
//! <k rows of n_terms floats>
//! ```

use std::io::{BufRead, Write};

use songsim_core::linalg::Matrix;
use songsim_core::svd::SvdModel;
use songsim_core::tfidf::Vocabulary;

use super::{header_value, join_floats, FormatError, LineCursor};
use crate::io::fmt_f64;

const MAGIC: &str = "songsim-tfidf";

#[derive(Debug, Clone, PartialEq)]
pub struct TfidfModel {
    pub vocab: Vocabulary,
    pub svd: SvdModel,
}

pub fn write_tfidf_model<W: Write>(mut w: W, m: &TfidfModel) -> std::io::Result<()> {
    let v = &m.vocab;
    writeln!(w, "{MAGIC} 1")?;
    writeln!(
        w,
        "params k={} seed={} n_docs={} max_terms={} n_terms={}",
        m.svd.k(),
        m.svd.seed,
        v.n_docs(),
        v.max_terms(),
        v.len()
    )?;
    writeln!(w, "terms")?;
    for (i, (term, df)) in v.terms().iter().zip(v.doc_freq()).enumerate() {
        writeln!(w, "{i}\t{term}\t{df}\t{}", fmt_f64(v.idf(i as u32)))?;
    }
    writeln!(w, "singular_values {}", join_floats(&m.svd.singular_values))?;
    writeln!(w, "components")?;
    for row in m.svd.components.iter_rows() {
        writeln!(w, "{}", join_floats(row))?;
    }
    w.flush()
}

pub fn read_tfidf_model<R: BufRead>(r: R) -> Result<TfidfModel, FormatError> {
    let mut c = LineCursor::new(r);
    let magic = c.expect(MAGIC)?;
    if magic != ["1"] {
        return Err(c.error("unsupported version"));
    }
    let params = c.expect("params")?;
    let field = |key: &str| header_value(&params, key).ok_or_else(|| c.error(format!("missing `{key}`")));
    let k: usize = c.parse(field("k")?)?;
    let seed: u64 = c.parse(field("seed")?)?;
    let n_docs: usize = c.parse(field("n_docs")?)?;
    let max_terms: usize = c.parse(field("max_terms")?)?;
    let n_terms: usize = c.parse(field("n_terms")?)?;

    c.expect("terms")?;
    let mut terms = Vec::with_capacity(n_terms);
    let mut doc_freq = Vec::with_capacity(n_terms);
    let mut idf = Vec::with_capacity(n_terms);
    for i in 0..n_terms {
        let line = c.next_line()?;
        let fields: Vec<&str> = line.split('\t').collect();
        let [id, term, df, w] = fields[..] else {
            return Err(c.error("expected `id<TAB>term<TAB>df<TAB>idf`"));
        };
        if c.parse::<usize>(id)? != i {
            return Err(c.error("term ids must be sequential"));
        }
        terms.push(term.to_string());
        doc_freq.push(c.parse::<u32>(df)?);
        idf.push(c.parse::<f64>(w)?);
    }
    let vocab = Vocabulary::from_parts(terms, doc_freq, n_docs, max_terms).map_err(|e| c.error(e.to_string()))?;
    if vocab.idf_values() != idf {
        return Err(c.error("stored idf values disagree with document frequencies"));
    }

    let sv = c.expect("singular_values")?;
    let singular_values = c.floats(sv.iter().map(String::as_str), k)?;
    c.expect("components")?;
    let mut data = Vec::with_capacity(k * n_terms);
    for _ in 0..k {
        let line = c.next_line()?;
        data.extend(c.floats(line.split_whitespace(), n_terms)?);
    }
    let components = Matrix::from_vec(k, n_terms, data).map_err(|e| c.error(e.to_string()))?;
    Ok(TfidfModel {
        vocab,
        svd: SvdModel {
            components,
            singular_values,
            seed,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use songsim_core::svd::fit_truncated_svd;
    use songsim_core::tfidf::{fit_vocabulary, tfidf_transform, Document};

    #[test]
    fn round_trip_is_bit_exact() {
        let docs: Vec<Document> = (0..6u32)
            .map(|i| Document {
                song_id: i,
                terms: [("rock", 1 + i), ("pop", 7), ("hip hop", i % 3 + 1), ("jazz", 2 * i + 1)]
                    .into_iter()
                    .filter(|(t, _)| *t != "jazz" || i % 2 == 0)
                    .map(|(t, c)| (t.to_string(), c))
                    .collect(),
            })
            .collect();
        let vocab = fit_vocabulary(&docs, 5000).unwrap();
        let svd = fit_truncated_svd(&tfidf_transform(&docs, &vocab), 3, 11).unwrap();
        let model = TfidfModel { vocab, svd };
        let mut buf = Vec::new();
        write_tfidf_model(&mut buf, &model).unwrap();
        let back = read_tfidf_model(buf.as_slice()).unwrap();
        assert_eq!(back, model);
        let mut again = Vec::new();
        write_tfidf_model(&mut again, &back).unwrap();
        assert_eq!(again, buf);
    }

    #[test]
    fn rejects_truncated_input() {
        let err = read_tfidf_model(&b"songsim-tfidf 1\nparams k=1 seed=0 n_docs=1 max_terms=5 n_terms=1\nterms\n"[..]).unwrap_err();
        assert_eq!(err.line, 4);
    }
}
