//! Tag documents, vocabulary selection and tf-idf weighting.
//!
//! Every song is one document whose terms are its normalized tags, each
//! repeated as many times as its tag count. Rows are weighted by smoothed idf
//! and L2-normalized.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::ingest::SongRecord;
use crate::linalg::Matrix;

pub const DEFAULT_MAX_TERMS: usize = 5000;

/// Term counts of one song's tag document.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Document {
    pub song_id: u32,
    pub terms: BTreeMap<String, u32>,
}

impl Document {
    /// Songs without tags produce empty documents; they are kept so row
    /// indices stay aligned with the records.
    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

pub fn build_documents(records: &[SongRecord]) -> Vec<Document> {
    records
        .iter()
        .map(|r| Document {
            song_id: r.song_id,
            terms: r.tags.iter().map(|(t, c)| (t.clone(), *c)).collect(),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    terms: Vec<String>,
    doc_freq: Vec<u32>,
    /// Number of documents the vocabulary was fitted on.
    n_docs: usize,
    max_terms: usize,
    index: BTreeMap<String, u32>,
}

impl Vocabulary {
    /// Rebuilds a vocabulary from persisted parts; ids follow slice order.
    pub fn from_parts(terms: Vec<String>, doc_freq: Vec<u32>, n_docs: usize, max_terms: usize) -> Result<Self> {
        if terms.len() != doc_freq.len() {
            return Err(Error::LengthMismatch {
                expected: terms.len(),
                actual: doc_freq.len(),
            });
        }
        if terms.len() > max_terms {
            return Err(Error::invalid("max_terms", "smaller than the number of terms"));
        }
        let mut index = BTreeMap::new();
        for (i, t) in terms.iter().enumerate() {
            if index.insert(t.clone(), i as u32).is_some() {
                return Err(Error::invalid("terms", alloc::format!("duplicate term `{t}`")));
            }
        }
        if doc_freq.iter().any(|&d| d == 0 || d as usize > n_docs) {
            return Err(Error::invalid("doc_freq", "must lie in 1..=n_docs"));
        }
        Ok(Vocabulary {
            terms,
            doc_freq,
            n_docs,
            max_terms,
            index,
        })
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn doc_freq(&self) -> &[u32] {
        &self.doc_freq
    }

    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    pub fn max_terms(&self) -> usize {
        self.max_terms
    }

    pub fn id(&self, term: &str) -> Option<u32> {
        self.index.get(term).copied()
    }

    /// Smoothed inverse document frequency `ln((1 + N) / (1 + df)) + 1`.
    pub fn idf(&self, term_id: u32) -> f64 {
        smoothed_idf(self.n_docs, self.doc_freq[term_id as usize])
    }

    pub fn idf_values(&self) -> Vec<f64> {
        (0..self.terms.len() as u32).map(|t| self.idf(t)).collect()
    }
}

pub fn smoothed_idf(n_docs: usize, doc_freq: u32) -> f64 {
    libm::log((1.0 + n_docs as f64) / (1.0 + f64::from(doc_freq))) + 1.0
}

/// Keeps the `max_terms` terms with the highest document frequency. Term ids
/// follow `(doc_freq desc, term asc)`.
pub fn fit_vocabulary(docs: &[Document], max_terms: usize) -> Result<Vocabulary> {
    if max_terms == 0 {
        return Err(Error::invalid("max_terms", "must be positive"));
    }
    let mut df: BTreeMap<&str, u32> = BTreeMap::new();
    for d in docs {
        for t in d.terms.keys() {
            *df.entry(t.as_str()).or_insert(0) += 1;
        }
    }
    if df.is_empty() {
        return Err(Error::Empty("every document is empty"));
    }
    let mut ranked: Vec<(&str, u32)> = df.into_iter().collect();
    // BTreeMap iteration is already term-ascending; a stable sort keeps that for ties
    ranked.sort_by_key(|&(_, count)| core::cmp::Reverse(count));
    ranked.truncate(max_terms);
    let (terms, doc_freq): (Vec<String>, Vec<u32>) = ranked.into_iter().map(|(t, d)| (String::from(t), d)).unzip();
    Vocabulary::from_parts(terms, doc_freq, docs.len(), max_terms)
}

/// Compressed sparse row matrix of non-negative document weights.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseDocMatrix {
    n_docs: usize,
    n_terms: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
}

impl SparseDocMatrix {
    /// Builds from `(doc, term, weight)` triples. Duplicate cells, negative or
    /// non-finite weights and out-of-range indices are rejected.
    pub fn from_triplets(n_docs: usize, n_terms: usize, mut entries: Vec<(usize, u32, f64)>) -> Result<Self> {
        entries.sort_by_key(|&(d, t, _)| (d, t));
        let mut row_ptr = vec![0usize; n_docs + 1];
        let mut cols = Vec::with_capacity(entries.len());
        let mut vals = Vec::with_capacity(entries.len());
        let mut prev: Option<(usize, u32)> = None;
        for (d, t, w) in entries {
            if d >= n_docs || t as usize >= n_terms {
                return Err(Error::invalid("entries", "index out of range"));
            }
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::invalid("entries", "weights must be finite and non-negative"));
            }
            if prev == Some((d, t)) {
                return Err(Error::invalid("entries", "duplicate (doc, term) cell"));
            }
            prev = Some((d, t));
            row_ptr[d + 1] += 1;
            cols.push(t);
            vals.push(w);
        }
        for i in 0..n_docs {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(SparseDocMatrix {
            n_docs,
            n_terms,
            row_ptr,
            cols,
            vals,
        })
    }

    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    pub fn n_terms(&self) -> usize {
        self.n_terms
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Column indices and weights of row `i`.
    pub fn row(&self, i: usize) -> (&[u32], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.cols[r.clone()], &self.vals[r])
    }

    pub fn to_dense(&self) -> Matrix {
        let mut m = Matrix::zeros(self.n_docs, self.n_terms);
        for i in 0..self.n_docs {
            let (c, v) = self.row(i);
            for (&t, &w) in c.iter().zip(v) {
                m[(i, t as usize)] = w;
            }
        }
        m
    }
}

/// `weight(d, t) = count(d, t) * idf(t)`, then each row scaled to unit L2
/// norm. Terms outside the vocabulary are ignored.
pub fn tfidf_transform(docs: &[Document], vocab: &Vocabulary) -> SparseDocMatrix {
    let mut entries = Vec::new();
    for (d, doc) in docs.iter().enumerate() {
        let start = entries.len();
        for (term, &count) in &doc.terms {
            if let Some(t) = vocab.id(term) {
                entries.push((d, t, f64::from(count) * vocab.idf(t)));
            }
        }
        let norm = libm::sqrt(entries[start..].iter().map(|e| e.2 * e.2).sum::<f64>());
        if norm > 0.0 {
            entries[start..].iter_mut().for_each(|e| e.2 /= norm);
        }
    }
    SparseDocMatrix::from_triplets(docs.len(), vocab.len(), entries).expect("entries are built in range and unique")
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    fn doc(id: u32, terms: &[(&str, u32)]) -> Document {
        Document {
            song_id: id,
            terms: terms.iter().map(|(t, c)| (t.to_string(), *c)).collect(),
        }
    }

    #[test]
    fn documents_carry_tag_counts() {
        let rec = SongRecord {
            song_id: 0,
            artist_id: 0,
            album_id: 0,
            name_norm: "headspin".into(),
            artist_norm: "plaid".into(),
            album_norm: "not for threes".into(),
            tags: vec![("idm".into(), 100), ("electronic".into(), 54)],
        };
        let mut bare = rec.clone();
        bare.tags.clear();
        let docs = build_documents(&[rec, bare]);
        assert_eq!(docs[0].terms.get("idm"), Some(&100));
        assert_eq!(docs[0].terms.get("electronic"), Some(&54));
        assert!(docs[1].is_empty());
    }

    #[test]
    fn vocabulary_selection_and_ties() {
        let docs = [doc(0, &[("a", 1), ("b", 1)]), doc(1, &[("a", 1), ("c", 1)]), doc(2, &[("a", 1)])];
        let v = fit_vocabulary(&docs, 2).unwrap();
        assert_eq!(v.terms(), ["a", "b"]);
        assert_eq!(v.doc_freq(), [3, 1]);
        assert_eq!(fit_vocabulary(&docs, 5000).unwrap().len(), 3);

        let docs = [doc(0, &[("x", 1), ("y", 1)]), doc(1, &[("x", 1), ("y", 1)])]
            .into_iter()
            .chain((2..5).map(|i| doc(i, &[("y", 1)])))
            .collect::<Vec<_>>();
        assert_eq!(fit_vocabulary(&docs, 1).unwrap().terms(), ["y"]);

        assert!(matches!(fit_vocabulary(&[doc(0, &[])], 10), Err(Error::Empty(_))));
        assert!(fit_vocabulary(&docs, 0).is_err());
    }

    #[test]
    fn idf_values() {
        let docs = [doc(0, &[("both", 1), ("one", 1)]), doc(1, &[("both", 1)])];
        let v = fit_vocabulary(&docs, 10).unwrap();
        assert_eq!(v.idf(v.id("both").unwrap()), 1.0);
        let want = libm::log(1.5) + 1.0;
        assert!((v.idf(v.id("one").unwrap()) - want).abs() < 1e-15);
        assert!((want - 1.40546).abs() < 1e-5);
    }

    #[test]
    fn rows_are_unit_or_zero() {
        let docs = [doc(0, &[("a", 100), ("b", 54)]), doc(1, &[("a", 1)]), doc(2, &[]), doc(3, &[("zzz", 3)])];
        let v = fit_vocabulary(&docs[..3], 10).unwrap();
        let m = tfidf_transform(&docs, &v);
        assert_eq!(m.n_docs(), 4);
        let (c, w) = m.row(1);
        assert_eq!((c, w), (&[v.id("a").unwrap()][..], &[1.0][..]));
        assert_eq!(m.row(2).0.len(), 0);
        assert_eq!(m.row(3).0.len(), 0, "unseen terms are ignored");
        let (_, w) = m.row(0);
        assert!((w.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn triplet_validation() {
        assert!(SparseDocMatrix::from_triplets(2, 2, vec![(0, 0, 1.0), (0, 0, 2.0)]).is_err());
        assert!(SparseDocMatrix::from_triplets(2, 2, vec![(0, 0, -1.0)]).is_err());
        assert!(SparseDocMatrix::from_triplets(2, 2, vec![(2, 0, 1.0)]).is_err());
        let m = SparseDocMatrix::from_triplets(2, 3, vec![(1, 2, 2.0), (0, 1, 1.0)]).unwrap();
        assert_eq!(m.to_dense().as_slice(), &[0.0, 1.0, 0.0, 0.0, 0.0, 2.0]);
    }
}
