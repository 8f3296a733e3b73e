//! Newline-delimited numeric input.

use std::fs;
use std::io::{self, Read};
use std::path::Path;

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct InputError {
    /// 1-based line number.
    pub line: usize,
    pub message: String,
}

impl std::fmt::Display for InputError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

/// One number per line. Blank lines and `#` comments are skipped; the first
/// data line may be a non-numeric header. NaN and infinities are rejected.
pub fn parse_values(text: &str) -> Result<Vec<f64>, InputError> {
    let mut values = Vec::new();
    let mut seen_data = false;
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let first = !seen_data;
        seen_data = true;
        match line.parse::<f64>() {
            Ok(v) if v.is_finite() => values.push(v),
            Ok(v) => {
                return Err(InputError {
                    line: idx + 1,
                    message: format!("non-finite value `{v}`"),
                })
            }
            Err(_) if first && line.chars().any(|c| c.is_ascii_alphabetic()) => {}
            Err(_) => {
                return Err(InputError {
                    line: idx + 1,
                    message: format!("not a number: `{line}`"),
                })
            }
        }
    }
    Ok(values)
}

/// Reads `path` (`-` for stdin) and parses it with [`parse_values`].
pub fn read_values(path: &Path) -> Result<Vec<f64>, CliError> {
    let text = if path == Path::new("-") {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s)?;
        s
    } else {
        fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?
    };
    parse_values(&text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}
