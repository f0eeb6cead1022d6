//! Versioned plain-text model files.
//!
//! ```text
//! dsc-model 1
//! dim <d>
//! bias <b>
//! meta <key> <value...>     (zero or more)
//! weights
//! <w_0>
//! ...
//! <w_{d-1}>
//! ```
//!
//! Numbers use the shortest representation that parses back to the same
//! `f64`, so a write/read cycle is bit-exact.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::rates::LinearClassifier;

pub const MAGIC: &str = "dsc-model";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub classifier: LinearClassifier,
    /// Free-form `(key, value)` pairs; keys must not contain whitespace.
    pub meta: Vec<(String, String)>,
}

impl ModelFile {
    pub fn new(classifier: LinearClassifier) -> Self {
        ModelFile {
            classifier,
            meta: Vec::new(),
        }
    }

    pub fn with_meta(mut self, key: impl Into<String>, value: impl ToString) -> Self {
        self.meta.push((key.into(), value.to_string()));
        self
    }

    pub fn to_text(&self) -> String {
        let c = &self.classifier;
        let mut out = format!("{MAGIC} {VERSION}\ndim {}\nbias {:?}\n", c.dim(), c.bias());
        for (k, v) in &self.meta {
            let _ = writeln!(out, "meta {k} {}", v.replace('\n', " "));
        }
        out.push_str("weights\n");
        for w in c.weights() {
            let _ = writeln!(out, "{w:?}");
        }
        out
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let err = |line: usize, message: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end()));
        let mut next = |what: &str| lines.next().ok_or_else(|| err(0, format!("unexpected end of file, expected {what}")));

        let (n, header) = next("header")?;
        match header.split_once(' ') {
            Some((MAGIC, v)) if v == VERSION.to_string() => {}
            Some((MAGIC, v)) => return Err(err(n, format!("unsupported model version {v}"))),
            _ => return Err(err(n, "not a model file".into())),
        }
        let (n, dim_line) = next("dim")?;
        let dim: usize = dim_line
            .strip_prefix("dim ")
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| err(n, "expected `dim <d>`".into()))?;
        let (n, bias_line) = next("bias")?;
        let bias: f64 = bias_line
            .strip_prefix("bias ")
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| err(n, "expected `bias <b>`".into()))?;
        let mut meta = Vec::new();
        loop {
            let (n, line) = next("weights")?;
            if line == "weights" {
                break;
            }
            let rest = line.strip_prefix("meta ").ok_or_else(|| err(n, format!("unexpected line {line:?}")))?;
            let (k, v) = rest.split_once(' ').unwrap_or((rest, ""));
            meta.push((k.to_string(), v.to_string()));
        }
        let mut w = Vec::with_capacity(dim);
        for _ in 0..dim {
            let (n, line) = next("weight")?;
            w.push(line.parse::<f64>().map_err(|_| err(n, format!("invalid weight {line:?}")))?);
        }
        if let Some((n, extra)) = lines.find(|(_, l)| !l.is_empty()) {
            return Err(err(n, format!("trailing content {extra:?}")));
        }
        let classifier = LinearClassifier::new(w, bias).map_err(|e| err(0, e.to_string()))?;
        Ok(ModelFile { classifier, meta })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        super::write_text(path, &self.to_text())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&super::read_text(path)?, path)
    }

    pub fn meta_value(&self, key: &str) -> Option<&str> {
        self.meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bit_exact_round_trip() {
        let clf = LinearClassifier::new(vec![0.1, -1.0 / 3.0, 1e-300, 0.0, 123456789.125], 2.0_f64.sqrt()).unwrap();
        let m = ModelFile::new(clf).with_meta("seed", 7).with_meta("note", "two words");
        let text = m.to_text();
        let back = ModelFile::parse(&text, Path::new("m")).unwrap();
        assert_eq!(back, m);
        for (a, b) in back.classifier.weights().iter().zip(m.classifier.weights()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        assert_eq!(back.meta_value("note"), Some("two words"));
    }

    #[test]
    fn rejects_bad_input() {
        let p = Path::new("m");
        assert!(ModelFile::parse("nope\n", p).is_err());
        assert!(ModelFile::parse("dsc-model 2\n", p).is_err());
        assert!(ModelFile::parse("dsc-model 1\ndim 2\nbias 0.0\nweights\n1.0\n", p).is_err());
        assert!(ModelFile::parse("dsc-model 1\ndim 1\nbias 0.0\nweights\n1.0\n2.0\n", p).is_err());
    }
}
