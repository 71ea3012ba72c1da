//! Feature matrix: `songsim-features <scheme> <rows> <dim>` header, then one
//! `song_id v1 .. vdim` line per row.

use std::io::{BufRead, Write};

use songsim_core::linalg::Matrix;
use songsim_core::{FeatureMatrix, FeatureScheme};

use super::{join_floats, FormatError, LineCursor};

const MAGIC: &str = "songsim-features";

pub fn write_features<W: Write>(mut w: W, f: &FeatureMatrix) -> std::io::Result<()> {
    writeln!(w, "{MAGIC} {} {} {}", f.scheme(), f.len(), f.dim())?;
    for (id, row) in f.song_ids().iter().zip(f.matrix().iter_rows()) {
        writeln!(w, "{id} {}", join_floats(row))?;
    }
    w.flush()
}

pub fn read_features<R: BufRead>(r: R) -> Result<FeatureMatrix, FormatError> {
    let mut c = LineCursor::new(r);
    let header = c.expect(MAGIC)?;
    let [scheme, rows, dim] = &header[..] else {
        return Err(c.error("expected `<scheme> <rows> <dim>`"));
    };
    let scheme: FeatureScheme = c.parse(scheme)?;
    let rows: usize = c.parse(rows)?;
    let dim: usize = c.parse(dim)?;
    let mut ids = Vec::with_capacity(rows);
    let mut data = Vec::with_capacity(rows * dim);
    for _ in 0..rows {
        let line = c.next_line()?;
        let mut fields = line.split_whitespace();
        let id = fields.next().ok_or_else(|| c.error("missing song id"))?;
        ids.push(c.parse::<u32>(id)?);
        data.extend(c.floats(fields, dim)?);
    }
    let m = Matrix::from_vec(rows, dim, data).map_err(|e| c.error(e.to_string()))?;
    FeatureMatrix::new(scheme, ids, m).map_err(|e| c.error(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let m = Matrix::from_rows(&[vec![0.1, -1.0 / 3.0], vec![f64::MIN_POSITIVE, 1e300]]).unwrap();
        let f = FeatureMatrix::new(FeatureScheme::Embed, vec![4, 2], m).unwrap();
        let mut buf = Vec::new();
        write_features(&mut buf, &f).unwrap();
        assert_eq!(read_features(buf.as_slice()).unwrap(), f);
        let bad = b"songsim-features embed 2 2\n4 0 0\n";
        assert_eq!(read_features(&bad[..]).unwrap_err().line, 3);
    }
}
