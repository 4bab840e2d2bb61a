//! Plain-text matrix files.
//!
//! ```text
//! # optional comment lines start with '#'
//! 2
//! 2 100
//! 1 100
//! ```
//!
//! The first non-comment line holds `n`, followed by exactly `n` rows of
//! `n` whitespace-separated finite decimals. Blank lines are ignored.

use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::linalg::Matrix;

/// A parse failure at a 1-based line and column.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, column {column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl ParseError {
    fn at(line: usize, column: usize, message: impl Into<String>) -> Self {
        Self {
            line,
            column,
            message: message.into(),
        }
    }
}

#[derive(Debug, Error)]
pub enum ReadError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse {
        path: String,
        #[source]
        source: ParseError,
    },
}

/// Whitespace-separated tokens with their 1-based starting columns.
fn tokens(line: &str) -> impl Iterator<Item = (usize, &str)> {
    line.split_whitespace().map(move |tok| {
        let offset = tok.as_ptr() as usize - line.as_ptr() as usize;
        (line[..offset].chars().count() + 1, tok)
    })
}

pub fn parse_matrix(text: &str) -> Result<Matrix, ParseError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| {
            let t = l.trim_start();
            !t.is_empty() && !t.starts_with('#')
        });

    let last_line = text.lines().count().max(1);
    let (hline, header) = lines
        .next()
        .ok_or_else(|| ParseError::at(last_line, 1, "missing dimension line"))?;
    let mut htoks = tokens(header);
    let (hcol, htok) = htoks.next().expect("non-blank line has a token");
    let n: usize = htok
        .parse()
        .map_err(|_| ParseError::at(hline, hcol, format!("expected a dimension, found '{htok}'")))?;
    if let Some((col, tok)) = htoks.next() {
        return Err(ParseError::at(hline, col, format!("unexpected token '{tok}' after dimension")));
    }
    if n == 0 {
        return Err(ParseError::at(hline, hcol, "dimension must be at least 1"));
    }

    let mut data = Vec::with_capacity(n * n);
    for row in 0..n {
        let (lno, line) = lines.next().ok_or_else(|| {
            ParseError::at(last_line, 1, format!("expected {n} rows, found {row}"))
        })?;
        let mut count = 0;
        for (col, tok) in tokens(line) {
            if count == n {
                return Err(ParseError::at(lno, col, format!("row has more than {n} entries")));
            }
            let v: f64 = tok
                .parse()
                .map_err(|_| ParseError::at(lno, col, format!("'{tok}' is not a number")))?;
            if !v.is_finite() {
                return Err(ParseError::at(lno, col, format!("'{tok}' is not finite")));
            }
            data.push(v);
            count += 1;
        }
        if count < n {
            let end = line.chars().count() + 1;
            return Err(ParseError::at(lno, end, format!("row has {count} entries, expected {n}")));
        }
    }
    if let Some((lno, line)) = lines.next() {
        let (col, _) = tokens(line).next().expect("non-blank line has a token");
        return Err(ParseError::at(lno, col, format!("content after the {n} declared rows")));
    }
    Ok(Matrix::from_row_major(n, data).expect("n * n finite entries"))
}

pub fn read_matrix_file(path: impl AsRef<Path>) -> Result<Matrix, ReadError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ReadError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_matrix(&text).map_err(|source| ReadError::Parse {
        path: path.display().to_string(),
        source,
    })
}

/// Shortest round-tripping decimal for each entry.
pub fn write_matrix(m: &Matrix) -> String {
    let mut out = String::new();
    writeln!(out, "{}", m.n()).unwrap();
    for row in m.rows() {
        let line: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        writeln!(out, "{}", line.join(" ")).unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_with_comments_and_blank_lines() {
        let m = parse_matrix("# example\n2\n\n2 100\n# mid\n1   100\n").unwrap();
        assert_eq!(m, Matrix::from_rows(&[[2.0, 100.0], [1.0, 100.0]]).unwrap());
        let m = parse_matrix("1\n-2.5e-3").unwrap();
        assert_eq!(m.get(0, 0), -2.5e-3);
    }

    #[test]
    fn reports_line_and_column() {
        let e = parse_matrix("3\n1 0 0\n0 1 0\n").unwrap_err();
        assert_eq!(e.line, 3);
        assert!(e.message.contains("expected 3 rows"));

        let e = parse_matrix("2\n1 x\n0 1\n").unwrap_err();
        assert_eq!((e.line, e.column), (2, 3));

        let e = parse_matrix("2\n1 0 7\n0 1\n").unwrap_err();
        assert_eq!((e.line, e.column), (2, 5));

        let e = parse_matrix("2\n1\n0 1\n").unwrap_err();
        assert_eq!((e.line, e.column), (2, 2));

        let e = parse_matrix("2\n1 0\n0 1\n5 5\n").unwrap_err();
        assert_eq!((e.line, e.column), (4, 1));

        let e = parse_matrix("  two\n").unwrap_err();
        assert_eq!((e.line, e.column), (1, 3));

        assert!(parse_matrix("0\n").is_err());
        assert!(parse_matrix("").is_err());
        assert!(parse_matrix("1\ninf\n").is_err());
        assert!(parse_matrix("1\nNaN\n").is_err());
    }

    #[test]
    fn write_then_parse_is_exact() {
        let m = Matrix::from_rows(&[[0.1, 1.0 / 3.0], [-2e-300, 12345.678]]).unwrap();
        let text = write_matrix(&m);
        assert_eq!(text.lines().next(), Some("2"));
        assert_eq!(parse_matrix(&text).unwrap(), m);
    }
}
