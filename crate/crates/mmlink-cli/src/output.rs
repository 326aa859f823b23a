//! Result emission: CSV and JSON files with a provenance header.
//!
//! Every file starts with the tool version and the full resolved config
//! that produced it, so any output can be re-run bit-for-bit. CSV uses
//! comma separators, '.' decimals, an LF-terminated header row, and
//! numbers at 12 significant digits.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::ResolvedConfig;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Render with 12 significant digits, plain decimal notation where it stays
/// readable and scientific notation for extreme magnitudes, trailing zeros
/// trimmed.
pub fn sig12(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let mag = x.abs().log10().floor() as i32;
    if (-5..12).contains(&mag) {
        let decimals = (11 - mag).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        trim_zeros(format!("{:.11e}", x))
    }
}

fn trim_zeros(mut s: String) -> String {
    if s.contains('e') {
        let (mantissa, exp) = s.split_once('e').unwrap();
        let m = if mantissa.contains('.') {
            mantissa.trim_end_matches('0').trim_end_matches('.')
        } else {
            mantissa
        };
        return format!("{m}e{exp}");
    }
    if s.contains('.') {
        s = s.trim_end_matches('0').trim_end_matches('.').to_string();
    }
    s
}

/// Compact label for a degree value used inside file names: `5`, `7.5`.
pub fn deg_label(d: f64) -> String {
    trim_zeros(format!("{d:.4}"))
}

pub fn provenance_lines(cfg: &ResolvedConfig) -> [String; 2] {
    [
        format!("# mmlink {VERSION}"),
        format!("# config: {}", cfg.to_json()),
    ]
}

/// Write a CSV file: provenance comments, a header row, then the records.
pub fn write_csv(
    dir: &Path,
    name: &str,
    cfg: &ResolvedConfig,
    header: &[&str],
    rows: &[Vec<String>],
) -> std::io::Result<PathBuf> {
    let path = dir.join(name);
    let mut buf = String::new();
    for line in provenance_lines(cfg) {
        buf.push_str(&line);
        buf.push('\n');
    }
    buf.push_str(&header.join(","));
    buf.push('\n');
    for row in rows {
        debug_assert_eq!(row.len(), header.len());
        buf.push_str(&row.join(","));
        buf.push('\n');
    }
    fs::write(&path, buf)?;
    Ok(path)
}

#[derive(Serialize)]
struct JsonEnvelope<'a, T: Serialize> {
    version: &'a str,
    config: &'a ResolvedConfig,
    #[serde(flatten)]
    body: T,
}

/// Write a JSON file wrapping `body` with the version and resolved config.
pub fn write_json<T: Serialize>(
    dir: &Path,
    name: &str,
    cfg: &ResolvedConfig,
    body: T,
) -> std::io::Result<PathBuf> {
    let path = dir.join(name);
    let envelope = JsonEnvelope {
        version: VERSION,
        config: cfg,
        body,
    };
    let mut file = fs::File::create(&path)?;
    serde_json::to_writer_pretty(&mut file, &envelope)?;
    file.write_all(b"\n")?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(sig12(0.0), "0");
        assert_eq!(sig12(5.0), "5");
        assert_eq!(sig12(-2.5), "-2.5");
        assert_eq!(sig12(1.0 / 3.0), "0.333333333333");
        assert_eq!(sig12(12.3456789012345), "12.3456789012");
        assert_eq!(sig12(1234567890.12345), "1234567890.12");
        assert_eq!(sig12(0.000123456789012345), "0.000123456789012");
        assert_eq!(sig12(1.23e-9), "1.23e-9");
        assert_eq!(sig12(9.87654321e15), "9.87654321e15");
    }

    #[test]
    fn labels_trim_cleanly() {
        assert_eq!(deg_label(5.0), "5");
        assert_eq!(deg_label(7.5), "7.5");
        assert_eq!(deg_label(0.1), "0.1");
    }
}
