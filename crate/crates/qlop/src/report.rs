//! Check reports and their on-disk form (one JSON record per line).
//!
//! `pass` is always `residual < tolerance`; structural failures (e.g. a
//! residual sequence that should decrease but does not) are reported with
//! the sentinel residual 1.0, which no tolerance in this crate accepts.
//! Wall time lives in its own field so reports can be compared with timing
//! stripped.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::Instant;
use thiserror::Error;

use num_complex::Complex64 as C64;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("report io: {0}")]
    Io(#[from] std::io::Error),
    #[error("report line {line}: {source}")]
    Parse { line: usize, source: serde_json::Error },
}

/// Residual that signals a structural failure regardless of tolerance.
pub const STRUCTURAL_FAILURE: f64 = 1.0;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CheckReport {
    pub name: String,
    pub params: BTreeMap<String, String>,
    pub residual: f64,
    pub tolerance: f64,
    pub margin: String,
    pub pass: bool,
    pub wall_time_ms: f64,
    pub notes: String,
}

impl CheckReport {
    pub fn new(
        name: impl Into<String>,
        params: BTreeMap<String, String>,
        residual: f64,
        tolerance: f64,
        margin: impl Into<String>,
        notes: impl Into<String>,
        wall_time_ms: f64,
    ) -> Self {
        Self {
            name: name.into(),
            params,
            residual,
            tolerance,
            margin: margin.into(),
            pass: residual < tolerance,
            wall_time_ms,
            notes: notes.into(),
        }
    }

    /// Equality with timing stripped.
    pub fn same_outcome(&self, other: &Self) -> bool {
        self.name == other.name
            && self.params == other.params
            && self.residual == other.residual
            && self.tolerance == other.tolerance
            && self.margin == other.margin
            && self.pass == other.pass
            && self.notes == other.notes
    }
}

/// Incrementally built parameter map with stable formatting.
#[derive(Debug, Default, Clone)]
pub struct Params(BTreeMap<String, String>);

impl Params {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn c64(mut self, key: &str, v: C64) -> Self {
        self.0.insert(key.into(), fmt_c64(v));
        self
    }

    pub fn f64(mut self, key: &str, v: f64) -> Self {
        self.0.insert(key.into(), format!("{v}"));
        self
    }

    pub fn usize(mut self, key: &str, v: usize) -> Self {
        self.0.insert(key.into(), format!("{v}"));
        self
    }

    pub fn str(mut self, key: &str, v: &str) -> Self {
        self.0.insert(key.into(), v.into());
        self
    }

    pub fn build(self) -> BTreeMap<String, String> {
        self.0
    }
}

pub fn fmt_c64(v: C64) -> String {
    if v.im == 0.0 {
        format!("{}", v.re)
    } else {
        format!("{}{}{}i", v.re, if v.im < 0.0 { "" } else { "+" }, v.im)
    }
}

/// Millisecond stopwatch for report timing fields.
pub struct Timer(Instant);

impl Timer {
    pub fn start() -> Self {
        Self(Instant::now())
    }

    pub fn ms(&self) -> f64 {
        self.0.elapsed().as_secs_f64() * 1e3
    }
}

impl Default for Timer {
    fn default() -> Self {
        Self::start()
    }
}

/// Writes one JSON record per line, in the given order.
pub fn write_report(path: &Path, reports: &[CheckReport]) -> Result<(), ReportError> {
    let mut text = String::new();
    for r in reports {
        text.push_str(&serde_json::to_string(r).expect("report serialization is infallible"));
        text.push('\n');
    }
    fs::write(path, text)?;
    Ok(())
}

pub fn read_report(path: &Path) -> Result<Vec<CheckReport>, ReportError> {
    let text = fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(line)
                .map_err(|source| ReportError::Parse { line: i + 1, source })?,
        );
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pass_follows_residual() {
        let r = CheckReport::new(
            "x",
            Params::new().f64("q", 1.3).build(),
            1e-13,
            1e-12,
            "none",
            "",
            0.1,
        );
        assert!(r.pass);
        let r = CheckReport::new("x", Params::new().build(), 1e-12, 1e-12, "none", "", 0.1);
        assert!(!r.pass);
    }

    #[test]
    fn report_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("report.jsonl");
        let reports = vec![
            CheckReport::new(
                "a/b",
                Params::new().f64("q", 1.3).c64("mu", C64::new(0.7321, 0.0)).build(),
                3.2e-13,
                1e-12,
                "fock<=17",
                "note",
                1.25,
            ),
            CheckReport::new(
                "c",
                Params::new().build(),
                STRUCTURAL_FAILURE,
                1e-6,
                "none",
                "non-monotone",
                0.5,
            ),
        ];
        write_report(&path, &reports).unwrap();
        let back = read_report(&path).unwrap();
        assert_eq!(back, reports);
        assert!(back[0].same_outcome(&reports[0]));
    }
}
