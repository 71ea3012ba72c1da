//! Word-vector text format: a `<vocab> <dim>` header, then one token per line
//! followed by its floats.

use std::io::{BufRead, Write};

use songsim_core::embed::{EmbeddingModel, SkipGramParams};
use songsim_core::linalg::Matrix;

use super::{join_floats, FormatError, LineCursor};

pub fn write_embedding<W: Write>(mut w: W, m: &EmbeddingModel) -> std::io::Result<()> {
    writeln!(w, "{} {}", m.vocab_size(), m.dim())?;
    for (token, row) in m.tokens().iter().zip(m.vectors().iter_rows()) {
        writeln!(w, "{token} {}", join_floats(row))?;
    }
    w.flush()
}

/// Training hyperparameters are not part of the format and are supplied by
/// the caller.
pub fn read_embedding<R: BufRead>(r: R, params: SkipGramParams) -> Result<EmbeddingModel, FormatError> {
    let mut c = LineCursor::new(r);
    let header = c.next_line()?;
    let mut parts = header.split_whitespace();
    let (Some(vocab), Some(dim), None) = (parts.next(), parts.next(), parts.next()) else {
        return Err(c.error("expected `<vocab> <dim>`"));
    };
    let vocab: usize = c.parse(vocab)?;
    let dim: usize = c.parse(dim)?;
    let mut tokens = Vec::with_capacity(vocab);
    let mut data = Vec::with_capacity(vocab * dim);
    for _ in 0..vocab {
        let line = c.next_line()?;
        let mut fields = line.split_whitespace();
        let token = fields.next().ok_or_else(|| c.error("missing token"))?;
        tokens.push(token.to_string());
        data.extend(c.floats(fields, dim)?);
    }
    let vectors = Matrix::from_vec(vocab, dim, data).map_err(|e| c.error(e.to_string()))?;
    EmbeddingModel::new(tokens, vectors, SkipGramParams { dim, ..params }).map_err(|e| c.error(e.to_string()))
}
