//! LIBSVM text format: `<label> <index>:<value> ...` with labels `+1`/`-1`
//! and 1-based, strictly increasing indices.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::sparse::SparseVector;

#[derive(Debug, Clone, PartialEq)]
pub struct LibsvmData {
    /// `true` for +1.
    pub labels: Vec<bool>,
    pub features: Vec<SparseVector>,
    pub dim: usize,
}

impl LibsvmData {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

pub fn parse_libsvm(path: &Path, declared_dim: Option<usize>) -> Result<LibsvmData> {
    parse_libsvm_str(&super::read_text(path)?, path, declared_dim)
}

fn parse_label(tok: &str) -> Option<bool> {
    match tok {
        "+1" | "1" => Some(true),
        "-1" | "\u{2212}1" => Some(false),
        _ => None,
    }
}

/// Parses LIBSVM text. Blank lines are skipped; the dimension is the
/// largest index seen unless `declared_dim` is given, in which case larger
/// indices are an error.
pub fn parse_libsvm_str(text: &str, path: &Path, declared_dim: Option<usize>) -> Result<LibsvmData> {
    let err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut labels = Vec::new();
    let mut features = Vec::new();
    let mut dim = 0usize;
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let mut toks = line.split_whitespace();
        let Some(first) = toks.next() else { continue };
        let label = parse_label(first).ok_or_else(|| err(lineno, format!("invalid label {first:?}")))?;
        let mut pairs = Vec::new();
        let mut last = 0usize;
        for tok in toks {
            let (i, v) = tok
                .split_once(':')
                .ok_or_else(|| err(lineno, format!("expected index:value, found {tok:?}")))?;
            let i: usize = i.parse().map_err(|_| err(lineno, format!("invalid index in {tok:?}")))?;
            let v: f64 = v.parse().map_err(|_| err(lineno, format!("invalid value in {tok:?}")))?;
            if i == 0 {
                return Err(err(lineno, "indices are 1-based".into()));
            }
            if i <= last {
                return Err(err(lineno, format!("index {i} does not increase after {last}")));
            }
            if !v.is_finite() {
                return Err(err(lineno, format!("non-finite value in {tok:?}")));
            }
            if let Some(d) = declared_dim {
                if i > d {
                    return Err(err(lineno, format!("index {i} exceeds declared dimension {d}")));
                }
            }
            last = i;
            let i = u32::try_from(i - 1).map_err(|_| err(lineno, format!("index {i} too large")))?;
            pairs.push((i, v));
        }
        dim = dim.max(last);
        labels.push(label);
        features.push(SparseVector::from_sorted(pairs).map_err(|e| err(lineno, e.to_string()))?);
    }
    Ok(LibsvmData {
        labels,
        features,
        dim: declared_dim.unwrap_or(dim),
    })
}

/// Canonical text: `+1`/`-1` labels and shortest round-trip values.
pub fn to_libsvm_string(data: &LibsvmData) -> String {
    let mut out = String::new();
    for (label, x) in data.labels.iter().zip(&data.features) {
        out.push_str(if *label { "+1" } else { "-1" });
        for (i, v) in x.iter() {
            let _ = write!(out, " {}:{}", i + 1, v);
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<LibsvmData> {
        parse_libsvm_str(s, Path::new("t.svm"), None)
    }

    #[test]
    fn basic_line() {
        let d = parse("+1 1:0.5 3:1\n").unwrap();
        assert_eq!(d.labels, vec![true]);
        assert_eq!(d.features[0].indices(), &[0, 2]);
        assert_eq!(d.features[0].values(), &[0.5, 1.0]);
        assert_eq!(d.dim, 3);
    }

    #[test]
    fn label_only_and_blank_lines() {
        let d = parse("\n-1\n\n1 2:3\n").unwrap();
        assert_eq!(d.labels, vec![false, true]);
        assert!(d.features[0].is_empty());
        assert_eq!(d.dim, 2);
    }

    #[test]
    fn errors_carry_line_numbers() {
        match parse("+1 1:1\n+1 3:1 2:1\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        assert!(parse("2 1:1\n").is_err());
        assert!(parse("+1 1-1\n").is_err());
        assert!(parse("+1 0:1\n").is_err());
        assert!(parse_libsvm_str("+1 5:1\n", Path::new("t"), Some(4)).is_err());
    }

    #[test]
    fn canonical_round_trip() {
        let text = "+1 1:0.5 3:1\n-1\n-1 2:-0.1 7:1e-300\n";
        let d = parse(text).unwrap();
        let s = to_libsvm_string(&d);
        assert_eq!(parse(&s).unwrap(), d);
    }
}
