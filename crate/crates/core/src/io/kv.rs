use std::fs;
use std::path::Path;

use super::{io_err, IoError};

/// Ordered `key=value` pairs.
pub type KeyValues = Vec<(String, String)>;

/// Parses `key=value` lines; `#` starts a comment, blank lines are skipped.
pub fn parse_key_values(text: &str) -> Result<KeyValues, (usize, String)> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| (i + 1, format!("expected key=value, got {line:?}")))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

pub fn read_key_values(path: impl AsRef<Path>) -> Result<KeyValues, IoError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    parse_key_values(&text).map_err(|(line, reason)| IoError::Parse {
        path: path.to_path_buf(),
        line,
        reason,
    })
}

pub fn write_key_values(path: impl AsRef<Path>, pairs: &[(String, String)]) -> Result<(), IoError> {
    let path = path.as_ref();
    let text: String = pairs.iter().map(|(k, v)| format!("{k}={v}\n")).collect();
    fs::write(path, text).map_err(io_err(path))
}
