//! Skip-gram embeddings with negative sampling, trained on one "sentence" per
//! song, and the weighted tag/artist aggregation that turns them into song
//! vectors.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureMatrix, FeatureScheme};
use crate::ingest::SongRecord;
use crate::linalg::{axpy, dot, Matrix};
use crate::rng::{seeded, SeededRng};

/// Weight of the artist vector in a song vector; equal to the tag-count cap.
pub const ARTIST_WEIGHT: f64 = 100.0;

/// Multi-word names become one token: `"rolling stones"` -> `"rollingstones"`.
pub fn fuse(s: &str) -> String {
    s.chars().filter(|c| *c != ' ').collect()
}

/// Token sentences plus a frequency-sorted vocabulary.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    /// Sentences as token ids.
    pub sentences: Vec<Vec<u32>>,
    tokens: Vec<String>,
    counts: Vec<u64>,
    index: BTreeMap<String, u32>,
}

impl Corpus {
    /// Builds a corpus from tokenized sentences. Token ids follow
    /// `(frequency desc, token asc)`; empty tokens are skipped.
    pub fn from_sentences<S: AsRef<str>>(sentences: &[Vec<S>]) -> Self {
        let mut freq: BTreeMap<&str, u64> = BTreeMap::new();
        for s in sentences {
            for t in s {
                let t = t.as_ref();
                if !t.is_empty() {
                    *freq.entry(t).or_insert(0) += 1;
                }
            }
        }
        let mut ranked: Vec<(&str, u64)> = freq.into_iter().collect();
        ranked.sort_by_key(|&(_, count)| core::cmp::Reverse(count));
        let index: BTreeMap<String, u32> = ranked.iter().enumerate().map(|(i, (t, _))| (String::from(*t), i as u32)).collect();
        let sentences = sentences
            .iter()
            .map(|s| s.iter().filter_map(|t| index.get(t.as_ref()).copied()).collect())
            .collect();
        Corpus {
            sentences,
            tokens: ranked.iter().map(|(t, _)| String::from(*t)).collect(),
            counts: ranked.iter().map(|(_, c)| *c).collect(),
            index,
        }
    }

    pub fn vocab_size(&self) -> usize {
        self.tokens.len()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    /// Sentence `i` as strings.
    pub fn sentence_tokens(&self, i: usize) -> Vec<&str> {
        self.sentences[i].iter().map(|&t| self.tokens[t as usize].as_str()).collect()
    }

    pub fn token_total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// One sentence per song: artist, album and song name (each fused into one
/// token) followed by the fused tags by count descending, then name.
pub fn build_corpus(records: &[SongRecord]) -> Corpus {
    let sentences: Vec<Vec<String>> = records.iter().map(sentence_for).collect();
    Corpus::from_sentences(&sentences)
}

fn sentence_for(r: &SongRecord) -> Vec<String> {
    let mut tags: Vec<&(String, u32)> = r.tags.iter().collect();
    tags.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    [&r.artist_norm, &r.album_norm, &r.name_norm]
        .into_iter()
        .chain(tags.into_iter().map(|(t, _)| t))
        .map(|s| fuse(s))
        .filter(|t| !t.is_empty())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SkipGramParams {
    pub dim: usize,
    /// Context radius; `None` uses the whole sentence.
    pub window: Option<usize>,
    pub negatives: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    /// Floor of the linearly decayed learning rate, as a fraction of the initial one.
    pub min_learning_rate_ratio: f64,
    pub min_count: u64,
    /// Exponent applied to token counts in the negative-sampling distribution.
    pub ns_exponent: f64,
    pub seed: u64,
}

impl Default for SkipGramParams {
    fn default() -> Self {
        SkipGramParams {
            dim: 100,
            window: None,
            negatives: 5,
            epochs: 5,
            learning_rate: 0.025,
            min_learning_rate_ratio: 1e-4,
            min_count: 1,
            ns_exponent: 0.75,
            seed: 1,
        }
    }
}

/// Token vectors of a trained model.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingModel {
    tokens: Vec<String>,
    vectors: Matrix,
    index: BTreeMap<String, u32>,
    pub params: SkipGramParams,
}

impl EmbeddingModel {
    pub fn new(tokens: Vec<String>, vectors: Matrix, params: SkipGramParams) -> Result<Self> {
        if tokens.len() != vectors.rows() {
            return Err(Error::LengthMismatch {
                expected: vectors.rows(),
                actual: tokens.len(),
            });
        }
        if !vectors.is_finite() {
            return Err(Error::invalid("vectors", "non-finite entry"));
        }
        let mut index = BTreeMap::new();
        for (i, t) in tokens.iter().enumerate() {
            if index.insert(t.clone(), i as u32).is_some() {
                return Err(Error::invalid("tokens", alloc::format!("duplicate token `{t}`")));
            }
        }
        Ok(EmbeddingModel {
            tokens,
            vectors,
            index,
            params,
        })
    }

    pub fn dim(&self) -> usize {
        self.vectors.cols()
    }

    pub fn vocab_size(&self) -> usize {
        self.tokens.len()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn vectors(&self) -> &Matrix {
        &self.vectors
    }

    pub fn vector(&self, token: &str) -> Option<&[f64]> {
        self.index.get(token).map(|&i| self.vectors.row(i as usize))
    }

    pub fn similarity(&self, a: &str, b: &str) -> Option<f64> {
        let (x, y) = (self.vector(a)?, self.vector(b)?);
        crate::cooccur::cosine_similarity(x, y).ok()
    }
}

pub fn train_skipgram(corpus: &Corpus, params: &SkipGramParams) -> Result<EmbeddingModel> {
    train_skipgram_traced(corpus, params).map(|(m, _)| m)
}

/// Trains and also returns the mean negative-sampling loss of every epoch.
pub fn train_skipgram_traced(corpus: &Corpus, params: &SkipGramParams) -> Result<(EmbeddingModel, Vec<f64>)> {
    if params.dim == 0 || params.epochs == 0 || !(params.learning_rate > 0.0) {
        return Err(Error::invalid("params", "dim, epochs and learning rate must be positive"));
    }
    let kept: Vec<bool> = corpus.counts.iter().map(|&c| c >= params.min_count).collect();
    // remap to the retained vocabulary
    let mut remap = vec![u32::MAX; corpus.vocab_size()];
    let mut tokens = Vec::new();
    let mut counts = Vec::new();
    for (i, keep) in kept.iter().enumerate() {
        if *keep {
            remap[i] = tokens.len() as u32;
            tokens.push(corpus.tokens[i].clone());
            counts.push(corpus.counts[i]);
        }
    }
    let sentences: Vec<Vec<u32>> = corpus
        .sentences
        .iter()
        .map(|s| s.iter().map(|&t| remap[t as usize]).filter(|&t| t != u32::MAX).collect::<Vec<_>>())
        .filter(|s: &Vec<u32>| !s.is_empty())
        .collect();
    if tokens.is_empty() || sentences.is_empty() {
        return Err(Error::Empty("corpus"));
    }

    let dim = params.dim;
    let vocab = tokens.len();
    let mut rng = seeded(params.seed);
    let mut input = Matrix::zeros(vocab, dim);
    for v in 0..vocab {
        for x in input.row_mut(v) {
            *x = (rng.random::<f64>() - 0.5) / dim as f64;
        }
    }
    let mut output = Matrix::zeros(vocab, dim);
    let sampler = NegativeSampler::new(&counts, params.ns_exponent);

    let words_per_epoch: u64 = sentences.iter().map(|s| s.len() as u64).sum();
    let total_words = words_per_epoch * params.epochs as u64;
    let mut processed = 0u64;
    let mut grad = vec![0.0; dim];
    let mut epoch_loss = Vec::with_capacity(params.epochs);

    for _ in 0..params.epochs {
        let (mut loss, mut pairs) = (0.0, 0u64);
        for sentence in &sentences {
            for (pos, &center) in sentence.iter().enumerate() {
                let progress = processed as f64 / (total_words + 1) as f64;
                let lr = params.learning_rate * (1.0 - progress).max(params.min_learning_rate_ratio);
                processed += 1;
                let (lo, hi) = match params.window {
                    Some(w) => (pos.saturating_sub(w), (pos + w + 1).min(sentence.len())),
                    None => (0, sentence.len()),
                };
                for (cpos, &context) in sentence.iter().enumerate().take(hi).skip(lo) {
                    if cpos == pos {
                        continue;
                    }
                    loss += sgns_step(
                        &mut input,
                        &mut output,
                        center,
                        context,
                        params.negatives,
                        &sampler,
                        &mut rng,
                        lr,
                        &mut grad,
                    );
                    pairs += 1;
                }
            }
        }
        epoch_loss.push(if pairs > 0 { loss / pairs as f64 } else { 0.0 });
    }

    let model = EmbeddingModel::new(tokens, input, *params)?;
    Ok((model, epoch_loss))
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + libm::exp(-x))
}

/// One positive pair plus `negatives` sampled pairs. Returns the pair's loss
/// measured before the update.
#[allow(clippy::too_many_arguments)]
fn sgns_step(
    input: &mut Matrix,
    output: &mut Matrix,
    center: u32,
    context: u32,
    negatives: usize,
    sampler: &NegativeSampler,
    rng: &mut SeededRng,
    lr: f64,
    grad: &mut [f64],
) -> f64 {
    grad.iter_mut().for_each(|g| *g = 0.0);
    let mut loss = 0.0;
    for n in 0..=negatives {
        let (target, label) = if n == 0 {
            (context, 1.0)
        } else {
            let t = sampler.sample(rng);
            if t == context {
                continue;
            }
            (t, 0.0)
        };
        let score = dot(input.row(center as usize), output.row(target as usize));
        let p = sigmoid(score);
        loss -= if label > 0.0 {
            libm::log(p.max(1e-300))
        } else {
            libm::log((1.0 - p).max(1e-300))
        };
        let g = (label - p) * lr;
        axpy(g, output.row(target as usize), grad);
        let center_row = input.row(center as usize).to_vec();
        axpy(g, &center_row, output.row_mut(target as usize));
    }
    axpy(1.0, grad, input.row_mut(center as usize));
    loss
}

/// Samples token ids proportionally to `count^exponent`.
struct NegativeSampler {
    cumulative: Vec<f64>,
}

impl NegativeSampler {
    fn new(counts: &[u64], exponent: f64) -> Self {
        let mut acc = 0.0;
        let cumulative = counts
            .iter()
            .map(|&c| {
                acc += libm::pow(c as f64, exponent);
                acc
            })
            .collect();
        NegativeSampler { cumulative }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        let total = *self.cumulative.last().expect("non-empty vocabulary");
        let u = rng.random::<f64>() * total;
        let i = self.cumulative.partition_point(|&c| c <= u);
        i.min(self.cumulative.len() - 1) as u32
    }
}

/// A song's feature vector.
#[derive(Debug, Clone, PartialEq)]
pub struct SongVector {
    pub song_id: u32,
    pub vector: Vec<f64>,
}

/// `(Σ count_t · v_t + 100 · v_artist) / (Σ count_t + 100)` over the song's
/// tags that exist in the model. Tags missing from the vocabulary drop out of
/// both sums.
pub fn song_vector(record: &SongRecord, emb: &EmbeddingModel) -> Result<SongVector> {
    let artist = fuse(&record.artist_norm);
    let artist_vec = emb.vector(&artist).ok_or_else(|| Error::MissingToken {
        song_id: record.song_id,
        token: artist.clone(),
    })?;
    let mut acc: Vec<f64> = artist_vec.iter().map(|x| ARTIST_WEIGHT * x).collect();
    let mut weight = ARTIST_WEIGHT;
    for (tag, count) in &record.tags {
        if let Some(v) = emb.vector(&fuse(tag)) {
            let w = f64::from(*count);
            axpy(w, v, &mut acc);
            weight += w;
        }
    }
    acc.iter_mut().for_each(|x| *x /= weight);
    Ok(SongVector {
        song_id: record.song_id,
        vector: acc,
    })
}

/// One row per record, in record order.
pub fn build_feature_matrix_embed(records: &[SongRecord], emb: &EmbeddingModel) -> Result<FeatureMatrix> {
    let mut data = Vec::with_capacity(records.len() * emb.dim());
    let mut ids = Vec::with_capacity(records.len());
    for r in records {
        let v = song_vector(r, emb)?;
        data.extend_from_slice(&v.vector);
        ids.push(r.song_id);
    }
    FeatureMatrix::new(FeatureScheme::Embed, ids, Matrix::from_vec(records.len(), emb.dim(), data)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    fn record(id: u32, artist: &str, album: &str, tags: &[(&str, u32)]) -> SongRecord {
        SongRecord {
            song_id: id,
            artist_id: 0,
            album_id: 0,
            name_norm: "some song".into(),
            artist_norm: artist.into(),
            album_norm: album.into(),
            tags: tags.iter().map(|(t, c)| (t.to_string(), *c)).collect(),
        }
    }

    fn toy_model() -> EmbeddingModel {
        let tokens = vec!["a".to_string(), "t1".to_string(), "t2".to_string()];
        let vectors = Matrix::from_rows(&[[1.0, 0.0], [0.0, 1.0], [3.0, 3.0]]).unwrap();
        EmbeddingModel::new(tokens, vectors, SkipGramParams { dim: 2, ..Default::default() }).unwrap()
    }

    #[test]
    fn corpus_sentences() {
        let c = build_corpus(&[
            record(0, "rolling stones", "sticky fingers", &[("rock", 10), ("classic rock", 80)]),
            record(1, "x", "", &[]),
        ]);
        assert_eq!(
            c.sentence_tokens(0),
            ["rollingstones", "stickyfingers", "somesong", "classicrock", "rock"]
        );
        assert_eq!(c.sentence_tokens(1), ["x", "somesong"]);
        assert_eq!(c.tokens()[0], "somesong");
        assert!(c.tokens().iter().all(|t| !t.contains(' ')));
    }

    #[test]
    fn weighted_average() {
        let m = toy_model();
        let v = song_vector(&record(0, "a", "", &[]), &m).unwrap();
        assert_eq!(v.vector, [1.0, 0.0]);
        let v = song_vector(&record(0, "a", "", &[("t1", 100)]), &m).unwrap();
        assert_eq!(v.vector, [0.5, 0.5]);
        let v = song_vector(&record(0, "a", "", &[("t1", 50)]), &m).unwrap();
        assert_eq!(v.vector, [100.0 / 150.0, 50.0 / 150.0]);
        // out-of-vocabulary tags leave the denominator alone
        let v = song_vector(&record(0, "a", "", &[("t1", 50), ("nope", 90)]), &m).unwrap();
        assert_eq!(v.vector, [100.0 / 150.0, 50.0 / 150.0]);
        assert!(matches!(
            song_vector(&record(3, "b", "", &[]), &m),
            Err(Error::MissingToken { song_id: 3, .. })
        ));
    }

    #[test]
    fn feature_matrix_rows_follow_records() {
        let m = toy_model();
        let recs = [record(5, "a", "", &[("t2", 100)]), record(2, "a", "", &[])];
        let f = build_feature_matrix_embed(&recs, &m).unwrap();
        assert_eq!(f.song_ids(), [5, 2]);
        assert_eq!(f.get(5).unwrap(), &[2.0, 1.5]);
        assert_eq!(f.get(2).unwrap(), &[1.0, 0.0]);
    }

    #[test]
    fn training_shapes_and_errors() {
        let c = Corpus::from_sentences(&[vec!["a", "b", "c"], vec!["a", "d"]]);
        let p = SkipGramParams { dim: 7, ..Default::default() };
        let m = train_skipgram(&c, &p).unwrap();
        assert_eq!(m.dim(), 7);
        assert_eq!(m.vocab_size(), 4);
        assert!(m.vectors().is_finite());
        let empty: Vec<Vec<&str>> = vec![];
        assert!(matches!(train_skipgram(&Corpus::from_sentences(&empty), &p), Err(Error::Empty(_))));
    }

    #[test]
    fn sampler_respects_weights() {
        let s = NegativeSampler::new(&[1, 0, 1], 1.0);
        let mut rng = seeded(3);
        for _ in 0..200 {
            assert_ne!(s.sample(&mut rng), 1);
        }
    }
}
