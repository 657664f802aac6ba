//! On-disk formats: JSON configuration, session recordings and filter output.
//!
//! Recordings are CSV. A file starts with `#`-prefixed metadata lines (the
//! first one names the format and its schema version), followed by one
//! column header line and the data rows. Floats are written with 17
//! significant digits so every `f64` survives a round trip bit for bit.

pub mod config;
pub mod filtered;
pub mod session;

pub use config::{read_config, write_config, ConfigFile, FilterSection, InitialCovariance};
pub use filtered::{read_estimates, read_filtered, write_filtered, FilteredRecording};
pub use session::{read_session, write_session};

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

/// Exact decimal rendering of an `f64` (17 significant digits).
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Rejects files whose major version is newer than `supported`.
pub(crate) fn check_version(found: &str, supported: &str) -> Result<()> {
    let major = |v: &str| v.split('.').next().and_then(|m| m.trim().parse::<u32>().ok());
    match (major(found), major(supported)) {
        (Some(f), Some(s)) if f <= s => Ok(()),
        _ => Err(Error::Version {
            found: found.to_string(),
            supported: supported.to_string(),
        }),
    }
}

/// Leading metadata of a recording file.
pub(crate) struct Preamble {
    pub entries: BTreeMap<String, (usize, String)>,
    /// Lines consumed, including the column header.
    pub lines: usize,
    pub columns: Vec<String>,
}

pub(crate) fn parse_error(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: PathBuf::from(path),
        line,
        message: message.into(),
    }
}

impl Preamble {
    pub fn parse(path: &Path, text: &str, magic: &str, supported: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, first) = lines
            .next()
            .ok_or_else(|| parse_error(path, 1, "empty file"))?;
        let version: String = first
            .strip_prefix("# ")
            .and_then(|rest| rest.strip_prefix(magic))
            .map(|v| v.trim().to_string())
            .ok_or_else(|| parse_error(path, 1, format!("expected `# {magic} <version>`")))?;
        check_version(&version, supported)?;

        let mut entries = BTreeMap::new();
        for (i, line) in lines {
            let lineno = i + 1;
            if let Some(meta) = line.strip_prefix('#') {
                let (k, v) = meta
                    .trim_start()
                    .split_once('=')
                    .ok_or_else(|| parse_error(path, lineno, "metadata must be `# key=value`"))?;
                entries.insert(k.trim().to_string(), (lineno, v.to_string()));
            } else {
                let columns = line.split(',').map(|c| c.trim().to_string()).collect();
                return Ok(Self {
                    entries,
                    lines: lineno,
                    columns,
                });
            }
        }
        Err(parse_error(path, text.lines().count() + 1, "missing column header"))
    }

    pub fn get(&self, key: &str) -> Option<(usize, &str)> {
        self.entries.get(key).map(|(l, v)| (*l, v.as_str()))
    }

    pub fn require(&self, path: &Path, key: &str) -> Result<(usize, &str)> {
        self.get(key)
            .ok_or_else(|| parse_error(path, 1, format!("missing `# {key}=` metadata")))
    }
}

pub(crate) fn parse_finite(path: &Path, line: usize, column: &str, raw: &str) -> Result<f64> {
    let v: f64 = raw
        .trim()
        .parse()
        .map_err(|_| parse_error(path, line, format!("{column}: `{raw}` is not a number")))?;
    if !v.is_finite() {
        return Err(parse_error(path, line, format!("{column}: non-finite value `{raw}`")));
    }
    Ok(v)
}

pub(crate) fn parse_int<T: std::str::FromStr>(
    path: &Path,
    line: usize,
    column: &str,
    raw: &str,
) -> Result<T> {
    raw.trim()
        .parse()
        .map_err(|_| parse_error(path, line, format!("{column}: `{raw}` is not an integer")))
}

pub(crate) fn parse_flag(path: &Path, line: usize, column: &str, raw: &str) -> Result<bool> {
    match raw.trim() {
        "0" => Ok(false),
        "1" => Ok(true),
        other => Err(parse_error(path, line, format!("{column}: expected 0 or 1, got `{other}`"))),
    }
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub(crate) fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Data rows after the preamble, with 1-based file line numbers.
pub(crate) fn data_rows<'a>(
    path: &'a Path,
    text: &'a str,
    skip: usize,
    n_columns: usize,
) -> impl Iterator<Item = Result<(usize, csv::StringRecord)>> + 'a {
    let body_start: usize = text
        .split_inclusive('\n')
        .take(skip)
        .map(str::len)
        .sum();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(&text.as_bytes()[body_start..]);
    let records: Vec<_> = reader.records().collect();
    records.into_iter().map(move |r| {
        let rec = r.map_err(|e| {
            let line = e.position().map(|p| p.line() as usize).unwrap_or(0) + skip;
            parse_error(path, line, e.to_string())
        })?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0) + skip;
        if rec.len() != n_columns {
            return Err(parse_error(
                path,
                line,
                format!("expected {n_columns} fields, found {}", rec.len()),
            ));
        }
        Ok((line, rec))
    })
}
