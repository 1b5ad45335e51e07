//! Flat `key = value` configuration text.
//!
//! Blank lines and lines starting with `#` are ignored. Keys are the long
//! CLI flag names; `_` and `-` are interchangeable.

use std::path::Path;

use crate::{Error, Result};

/// `(line, key, value)` triples in file order. Keys are lower-cased.
pub fn parse_key_values(text: &str, path: &Path) -> Result<Vec<(usize, String, String)>> {
    let mut out: Vec<(usize, String, String)> = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line: n + 1,
            message,
        };
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| err(format!("expected key = value, found '{line}'")))?;
        let key = k.trim().to_ascii_lowercase();
        if key.is_empty() {
            return Err(err("empty key".into()));
        }
        if out.iter().any(|(_, k2, _)| k2.replace('-', "_") == key.replace('-', "_")) {
            return Err(err(format!("duplicate key '{key}'")));
        }
        out.push((n + 1, key, v.trim().to_string()));
    }
    Ok(out)
}

pub fn read_config(path: &Path) -> Result<Vec<(usize, String, String)>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_key_values(&text, path)
}
