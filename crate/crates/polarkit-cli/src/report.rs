//! Deterministic `key=value` report files.

use std::fmt::Display;
use std::fs::File;
use std::io::Write;
use std::path::Path;

use polarkit::error::Result;

/// Ordered key=value lines; values use Rust's shortest round-trip float
/// formatting, so re-reading a report recovers exact results.
#[derive(Debug, Default)]
pub struct Report {
    lines: Vec<(String, String)>,
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, key: &str, value: impl Display) {
        self.lines.push((key.to_string(), value.to_string()));
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = File::create(path.as_ref())?;
        for (k, v) in &self.lines {
            writeln!(out, "{k}={v}")?;
        }
        Ok(())
    }
}
