//! Ground-truth similarity from co-occurrence in listening histories.
//!
//! Each song is represented by its binary incidence vector over users; the
//! similarity of two songs is the cosine of those vectors, which for binary
//! vectors reduces to `|Ui ∩ Uj| / sqrt(|Ui| · |Uj|)`.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::UserHistory;

/// Cosine `Σxy / sqrt(Σx² · Σy²)`, or 0 when either vector has zero norm.
/// The result is clamped to `[-1, 1]` to absorb rounding.
pub fn cosine_similarity(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            expected: x.len(),
            actual: y.len(),
        });
    }
    let (mut xy, mut xx, mut yy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        xy += a * b;
        xx += a * a;
        yy += b * b;
    }
    Ok(cosine_from_sums(xy, xx, yy))
}

#[inline]
fn cosine_from_sums(xy: f64, xx: f64, yy: f64) -> f64 {
    let denom = libm::sqrt(xx * yy);
    if denom == 0.0 {
        return 0.0;
    }
    (xy / denom).clamp(-1.0, 1.0)
}

/// Minimum similarity an edge needs to survive filtering.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct SimilarityThreshold(f64);

impl SimilarityThreshold {
    pub const NONE: SimilarityThreshold = SimilarityThreshold(0.0);

    pub fn new(min_similarity: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&min_similarity) {
            return Err(Error::invalid("threshold", "must lie in [0, 1)"));
        }
        Ok(SimilarityThreshold(min_similarity))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Undirected weighted song graph stored as sorted adjacency lists.
///
/// Every edge `(a, b, s)` is stored in both directions, there are no
/// self-loops, and `0 <= s <= 1`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SimilarityGraph {
    adjacency: BTreeMap<u32, Vec<(u32, f64)>>,
    edge_count: usize,
}

impl SimilarityGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a graph from undirected edges. Self-pairs are ignored and a
    /// repeated pair (in either orientation) keeps the last weight.
    ///
    /// Weights must already lie in `[0, 1]`.
    pub fn from_edges<I: IntoIterator<Item = (u32, u32, f64)>>(edges: I) -> Self {
        let mut canonical: BTreeMap<(u32, u32), f64> = BTreeMap::new();
        for (a, b, s) in edges {
            if a == b {
                continue;
            }
            debug_assert!((0.0..=1.0).contains(&s));
            canonical.insert((a.min(b), a.max(b)), s);
        }
        Self::from_canonical(canonical)
    }

    fn from_canonical(canonical: BTreeMap<(u32, u32), f64>) -> Self {
        let mut adjacency: BTreeMap<u32, Vec<(u32, f64)>> = BTreeMap::new();
        for (&(a, b), &s) in &canonical {
            adjacency.entry(a).or_default().push((b, s));
            adjacency.entry(b).or_default().push((a, s));
        }
        for list in adjacency.values_mut() {
            list.sort_by_key(|&(n, _)| n);
        }
        SimilarityGraph {
            adjacency,
            edge_count: canonical.len(),
        }
    }

    /// Number of undirected edges.
    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edge_count == 0
    }

    /// Nodes with at least one edge, ascending.
    pub fn nodes(&self) -> impl Iterator<Item = u32> + '_ {
        self.adjacency.keys().copied()
    }

    /// Neighbors of `id` sorted by neighbor id.
    pub fn neighbors(&self, id: u32) -> &[(u32, f64)] {
        self.adjacency.get(&id).map_or(&[], Vec::as_slice)
    }

    pub fn degree(&self, id: u32) -> usize {
        self.neighbors(id).len()
    }

    pub fn weight(&self, a: u32, b: u32) -> Option<f64> {
        let list = self.neighbors(a);
        list.binary_search_by_key(&b, |&(n, _)| n).ok().map(|i| list[i].1)
    }

    /// Each undirected edge once as `(smaller, larger, weight)`, ascending.
    pub fn edges(&self) -> impl Iterator<Item = (u32, u32, f64)> + '_ {
        self.adjacency
            .iter()
            .flat_map(|(&a, list)| list.iter().filter(move |&&(b, _)| b > a).map(move |&(b, s)| (a, b, s)))
    }

    /// Checks the structural invariants: symmetry, no self-loops, weights in range.
    pub fn is_consistent(&self) -> bool {
        let mut directed = 0usize;
        for (&a, list) in &self.adjacency {
            for &(b, s) in list {
                if a == b || !(0.0..=1.0).contains(&s) || self.weight(b, a) != Some(s) {
                    return false;
                }
                directed += 1;
            }
        }
        directed == 2 * self.edge_count
    }
}

/// Cosine co-occurrence similarity between every pair of songs sharing at
/// least one user. Pairs with no common user get no edge.
pub fn build_similarity_graph(histories: &[UserHistory]) -> Result<SimilarityGraph> {
    if histories.is_empty() {
        return Err(Error::Empty("histories"));
    }
    let mut listeners: BTreeMap<u32, u32> = BTreeMap::new();
    let mut shared: BTreeMap<(u32, u32), u32> = BTreeMap::new();
    for h in histories {
        let songs: Vec<u32> = h.song_ids.iter().copied().collect();
        for (i, &a) in songs.iter().enumerate() {
            *listeners.entry(a).or_insert(0) += 1;
            for &b in &songs[i + 1..] {
                *shared.entry((a, b)).or_insert(0) += 1;
            }
        }
    }
    let canonical = shared
        .into_iter()
        .map(|((a, b), n)| {
            let s = cosine_from_sums(f64::from(n), f64::from(listeners[&a]), f64::from(listeners[&b]));
            ((a, b), s)
        })
        .collect();
    Ok(SimilarityGraph::from_canonical(canonical))
}

/// Keeps exactly the edges with `similarity >= threshold`.
pub fn filter_graph(g: &SimilarityGraph, t: SimilarityThreshold) -> SimilarityGraph {
    let kept = g
        .edges()
        .filter(|&(_, _, s)| s >= t.value())
        .map(|(a, b, s)| ((a, b), s))
        .collect();
    SimilarityGraph::from_canonical(kept)
}
