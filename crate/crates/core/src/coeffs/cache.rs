//! Plain-text coefficient cache.
//!
//! ```text
//! FLC 1 k=<k> q=<q>
//! <j_k> ... <j_1> <numerator>/<denominator>
//! ...
//! END <entry-count>
//! ```
//!
//! Entries appear in lexicographic index order with zeros written as `0/1`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use sha2::{Digest, Sha256};

use super::CoeffTensor;
use crate::error::{CacheError, Error, Result};

const MAGIC: &str = "FLC";
const VERSION: &str = "1";

/// Renders a tensor in cache format.
pub fn render_cache(tensor: &CoeffTensor) -> String {
    let k = tensor.order();
    let n = tensor.max_index() + 1;
    let mut out = String::with_capacity(tensor.len() * 16);
    writeln!(out, "{MAGIC} {VERSION} k={k} q={}", tensor.max_index()).unwrap();
    let mut idx = vec![0usize; k];
    for (pos, c) in tensor.entries().iter().enumerate() {
        let mut rem = pos;
        for slot in idx.iter_mut().rev() {
            *slot = rem % n;
            rem /= n;
        }
        for j in &idx {
            write!(out, "{j} ").unwrap();
        }
        writeln!(out, "{}/{}", c.numer(), c.denom()).unwrap();
    }
    writeln!(out, "END {}", tensor.len()).unwrap();
    out
}

/// Parses cache text produced by [`render_cache`].
pub fn parse_cache(text: &str) -> Result<CoeffTensor, CacheError> {
    let mut lines = text.lines().enumerate();
    let header = lines
        .next()
        .map(|(_, l)| l.trim())
        .filter(|l| !l.is_empty())
        .ok_or_else(|| CacheError::MalformedHeader("empty file".into()))?;
    let (k, q) = parse_header(header)?;
    let expected = (q + 1)
        .checked_pow(k as u32)
        .ok_or_else(|| CacheError::MalformedHeader(format!("q={q} is too large")))?;

    let n = q + 1;
    let mut entries = Vec::with_capacity(expected);
    for (lineno, raw) in lines {
        let line = raw.trim();
        let line_no = lineno + 1;
        if let Some(rest) = line.strip_prefix("END") {
            let reported: usize = rest.trim().parse().map_err(|_| CacheError::MalformedEntry {
                line: line_no,
                reason: format!("bad END line {line:?}"),
            })?;
            if reported != expected {
                return Err(CacheError::ChecksumMismatch {
                    declared: expected,
                    reported,
                });
            }
            if entries.len() != expected {
                return Err(CacheError::Truncated {
                    expected,
                    found: entries.len(),
                });
            }
            return Ok(CoeffTensor::from_entries(k, q, entries));
        }
        if entries.len() == expected {
            return Err(CacheError::MalformedEntry {
                line: line_no,
                reason: "more entries than the header declares".into(),
            });
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != k + 1 {
            return Err(CacheError::MalformedEntry {
                line: line_no,
                reason: format!("expected {} fields, found {}", k + 1, fields.len()),
            });
        }
        let mut rem = entries.len();
        let mut want = vec![0usize; k];
        for slot in want.iter_mut().rev() {
            *slot = rem % n;
            rem /= n;
        }
        for (field, want) in fields[..k].iter().zip(&want) {
            match field.parse::<usize>() {
                Ok(j) if j == *want => {}
                _ => {
                    return Err(CacheError::MalformedEntry {
                        line: line_no,
                        reason: format!("index {field:?} out of order (expected {want})"),
                    })
                }
            }
        }
        entries.push(parse_rational(fields[k]).ok_or_else(|| CacheError::MalformedEntry {
            line: line_no,
            reason: format!("bad rational {:?}", fields[k]),
        })?);
    }
    Err(CacheError::Truncated {
        expected,
        found: entries.len(),
    })
}

fn parse_header(header: &str) -> Result<(usize, usize), CacheError> {
    let bad = || CacheError::MalformedHeader(header.to_string());
    let fields: Vec<&str> = header.split_whitespace().collect();
    let [magic, version, k_field, q_field] = fields[..] else {
        return Err(bad());
    };
    if magic != MAGIC || version != VERSION {
        return Err(bad());
    }
    let k_text = k_field.strip_prefix("k=").ok_or_else(bad)?;
    let q: usize = q_field
        .strip_prefix("q=")
        .and_then(|v| v.parse().ok())
        .ok_or_else(bad)?;
    match k_text.parse::<usize>() {
        Ok(k @ (2 | 3)) => Ok((k, q)),
        _ => Err(CacheError::DeclaredOrder(k_text.to_string())),
    }
}

fn parse_rational(s: &str) -> Option<BigRational> {
    let (n, d) = s.split_once('/')?;
    let n: BigInt = n.parse().ok()?;
    let d: BigInt = d.parse().ok()?;
    if d.is_zero() {
        return None;
    }
    Some(BigRational::new(n, d))
}

/// Writes the cache file. Returns `false` without touching the file when it
/// already holds identical content.
pub fn save_cache(tensor: &CoeffTensor, path: &Path) -> Result<bool> {
    let text = render_cache(tensor);
    if let Ok(existing) = fs::read(path) {
        if existing == text.as_bytes() {
            return Ok(false);
        }
    }
    fs::write(path, text)?;
    Ok(true)
}

pub fn load_cache(path: &Path) -> Result<CoeffTensor> {
    let text = fs::read_to_string(path)?;
    parse_cache(&text).map_err(|source| Error::Cache {
        path: path.to_path_buf(),
        source,
    })
}

/// Hex SHA-256 of the rendered cache, as echoed in result headers.
pub fn file_checksum(tensor: &CoeffTensor) -> String {
    let digest = Sha256::digest(render_cache(tensor).as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let t = CoeffTensor::build(3, 6).unwrap();
        let back = parse_cache(&render_cache(&t)).unwrap();
        assert_eq!(back, t);
        let t2 = CoeffTensor::build(2, 1).unwrap();
        let text = render_cache(&t2);
        assert_eq!(text, "FLC 1 k=2 q=1\n0 0 2/1\n0 1 -2/3\n1 0 2/3\n1 1 0/1\nEND 4\n");
        assert_eq!(parse_cache(&text).unwrap(), t2);
    }

    #[test]
    fn distinct_errors() {
        let good = render_cache(&CoeffTensor::build(2, 1).unwrap());
        assert!(matches!(parse_cache(""), Err(CacheError::MalformedHeader(_))));
        assert!(matches!(parse_cache("FLC 2 k=2 q=1\n"), Err(CacheError::MalformedHeader(_))));
        assert!(matches!(
            parse_cache(&good.replace("k=2", "k=4")),
            Err(CacheError::DeclaredOrder(_))
        ));
        assert!(matches!(
            parse_cache(&good.replace("END 4\n", "")),
            Err(CacheError::Truncated { expected: 4, found: 4 })
        ));
        assert!(matches!(
            parse_cache(&good.replace("1 1 0/1\n", "")),
            Err(CacheError::Truncated { expected: 4, found: 3 })
        ));
        assert!(matches!(
            parse_cache(&good.replace("END 4", "END 5")),
            Err(CacheError::ChecksumMismatch { declared: 4, reported: 5 })
        ));
        assert!(matches!(
            parse_cache(&good.replace("-2/3", "-2/0")),
            Err(CacheError::MalformedEntry { line: 3, .. })
        ));
        assert!(matches!(
            parse_cache(&good.replace("0 1 -2/3", "1 0 -2/3")),
            Err(CacheError::MalformedEntry { line: 3, .. })
        ));
    }

    #[test]
    fn save_is_idempotent() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.flc");
        let t = CoeffTensor::build(3, 3).unwrap();
        assert!(save_cache(&t, &path).unwrap());
        assert!(!save_cache(&t, &path).unwrap());
        assert_eq!(load_cache(&path).unwrap(), t);
        assert_eq!(file_checksum(&t).len(), 64);
    }
}
