//! Textual artifact formats. Floats are written with 17 significant digits so
//! every artifact reads back bit-exact.

pub mod dataset;
pub mod embedding;
pub mod features;
pub mod model;
pub mod tfidf;

use std::fmt;
use std::io::BufRead;
use std::str::FromStr;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FormatError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for FormatError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

impl std::error::Error for FormatError {}

/// Line reader that keeps track of line numbers for error messages.
pub(crate) struct LineCursor<R> {
    inner: std::io::Lines<R>,
    line: usize,
}

impl<R: BufRead> LineCursor<R> {
    pub(crate) fn new(r: R) -> Self {
        LineCursor { inner: r.lines(), line: 0 }
    }

    pub(crate) fn error(&self, message: impl Into<String>) -> FormatError {
        FormatError {
            line: self.line,
            message: message.into(),
        }
    }

    pub(crate) fn next_line(&mut self) -> Result<String, FormatError> {
        self.line += 1;
        match self.inner.next() {
            Some(Ok(l)) => Ok(l),
            Some(Err(e)) => Err(self.error(e.to_string())),
            None => Err(self.error("unexpected end of file")),
        }
    }

    /// Next line, which must start with `keyword`; returns the remaining fields.
    pub(crate) fn expect(&mut self, keyword: &str) -> Result<Vec<String>, FormatError> {
        let line = self.next_line()?;
        let mut parts = line.split_whitespace();
        if parts.next() != Some(keyword) {
            return Err(self.error(format!("expected `{keyword}`")));
        }
        Ok(parts.map(str::to_string).collect())
    }

    pub(crate) fn parse<T: FromStr>(&self, field: &str) -> Result<T, FormatError> {
        field.parse().map_err(|_| self.error(format!("cannot parse `{field}`")))
    }

    /// Parses exactly `n` whitespace-separated floats.
    pub(crate) fn floats<'a>(&self, fields: impl Iterator<Item = &'a str>, n: usize) -> Result<Vec<f64>, FormatError> {
        let v = fields.map(|f| self.parse::<f64>(f)).collect::<Result<Vec<_>, _>>()?;
        if v.len() != n {
            return Err(self.error(format!("expected {n} values, found {}", v.len())));
        }
        Ok(v)
    }
}

pub(crate) fn join_floats(values: &[f64]) -> String {
    let mut s = String::with_capacity(values.len() * 24);
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        s.push_str(&crate::io::fmt_f64(*v));
    }
    s
}

/// `key=value` pairs from a header line.
pub(crate) fn header_value<'a>(fields: &'a [String], key: &str) -> Option<&'a str> {
    fields.iter().find_map(|f| f.strip_prefix(key)?.strip_prefix('='))
}
