//! Text formats for emissions (`W2E1`), transitions (`W2T1`) and dataset
//! manifests.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::decoder::{EmissionMatrix, TransitionMatrix};
use crate::tokens::TokenSet;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("{path}: line {line}: {msg}")]
    Parse { path: String, line: usize, msg: String },
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

fn parse_err(path: &str, line: usize, msg: impl Into<String>) -> FormatError {
    FormatError::Parse { path: path.to_string(), line, msg: msg.into() }
}

fn parse_row(path: &str, line: usize, text: &str, expected: usize) -> Result<Vec<f64>, FormatError> {
    let row: Vec<f64> = text
        .split_whitespace()
        .map(|v| v.parse::<f64>().map_err(|_| parse_err(path, line, format!("bad score {v:?}"))))
        .collect::<Result<_, _>>()?;
    if row.len() != expected {
        return Err(parse_err(path, line, format!("{} scores, expected {expected}", row.len())));
    }
    if let Some(v) = row.iter().find(|v| !v.is_finite()) {
        return Err(parse_err(path, line, format!("non-finite score {v}")));
    }
    Ok(row)
}

fn read(path: &Path) -> Result<String, FormatError> {
    std::fs::read_to_string(path).map_err(|source| FormatError::Io { path: path.display().to_string(), source })
}

fn write(path: &Path, text: &str) -> Result<(), FormatError> {
    std::fs::write(path, text).map_err(|source| FormatError::Io { path: path.display().to_string(), source })
}

/// Parses `W2E1` text. `name` labels errors.
pub fn parse_emissions(text: &str, name: &str) -> Result<EmissionMatrix, FormatError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end()));
    match lines.next() {
        Some((_, "W2E1")) => {}
        _ => return Err(parse_err(name, 1, "missing W2E1 header")),
    }
    let tokens: Vec<&str> = match lines.next() {
        Some((_, l)) if l.starts_with("tokens:") => l["tokens:".len()..].split_whitespace().collect(),
        _ => return Err(parse_err(name, 2, "expected `tokens:` line")),
    };
    let ts = TokenSet::from_tokens(tokens.iter().copied()).map_err(|e| parse_err(name, 2, e.to_string()))?;
    let frames: usize = match lines.next() {
        Some((_, l)) if l.starts_with("frames:") => {
            l["frames:".len()..].trim().parse().map_err(|_| parse_err(name, 3, "bad frame count"))?
        }
        _ => return Err(parse_err(name, 3, "expected `frames:` line")),
    };
    let mut scores = Vec::with_capacity(frames * ts.len());
    let mut seen = 0;
    for (no, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        if seen == frames {
            return Err(parse_err(name, no, format!("more than {frames} frames")));
        }
        scores.extend(parse_row(name, no, line, ts.len())?);
        seen += 1;
    }
    if seen != frames {
        return Err(parse_err(name, 3, format!("declared {frames} frames, found {seen}")));
    }
    EmissionMatrix::new(ts, scores).map_err(|e| parse_err(name, 3, e.to_string()))
}

pub fn format_emissions(em: &EmissionMatrix) -> String {
    let mut out = String::from("W2E1\n");
    let _ = writeln!(out, "tokens: {}", em.tokens().tokens().join(" "));
    let _ = writeln!(out, "frames: {}", em.frames());
    for t in 0..em.frames() {
        let row: Vec<String> = em.row(t).iter().map(f64::to_string).collect();
        let _ = writeln!(out, "{}", row.join(" "));
    }
    out
}

pub fn read_emissions(path: &Path) -> Result<EmissionMatrix, FormatError> {
    parse_emissions(&read(path)?, &path.display().to_string())
}

pub fn write_emissions(path: &Path, em: &EmissionMatrix) -> Result<(), FormatError> {
    write(path, &format_emissions(em))
}

/// Parses `W2T1` text: the header, then N rows of N scores.
pub fn parse_transitions(text: &str, name: &str) -> Result<TransitionMatrix, FormatError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end()));
    match lines.next() {
        Some((_, "W2T1")) => {}
        _ => return Err(parse_err(name, 1, "missing W2T1 header")),
    }
    let rows: Vec<(usize, &str)> = lines.filter(|(_, l)| !l.trim().is_empty()).collect();
    let n = rows.len();
    let mut scores = Vec::with_capacity(n * n);
    for (no, line) in rows {
        scores.extend(parse_row(name, no, line, n)?);
    }
    TransitionMatrix::new(n, scores).map_err(|e| parse_err(name, 1, e.to_string()))
}

pub fn format_transitions(tr: &TransitionMatrix) -> String {
    let mut out = String::from("W2T1\n");
    for p in 0..tr.size() {
        let row: Vec<String> = (0..tr.size()).map(|n| tr.get(p, n).to_string()).collect();
        let _ = writeln!(out, "{}", row.join(" "));
    }
    out
}

pub fn read_transitions(path: &Path) -> Result<TransitionMatrix, FormatError> {
    parse_transitions(&read(path)?, &path.display().to_string())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub id: String,
    pub emissions: PathBuf,
    pub reference: String,
}

/// Parses `utt_id<TAB>emission_path<TAB>reference` lines. Relative paths
/// are resolved against `base`.
pub fn parse_manifest(text: &str, base: &Path, name: &str) -> Result<Vec<ManifestEntry>, FormatError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.splitn(3, '\t');
        let (Some(id), Some(path)) = (fields.next(), fields.next()) else {
            return Err(parse_err(name, i + 1, "expected utt_id<TAB>emission_path<TAB>reference"));
        };
        let reference = fields.next().unwrap_or("").split_whitespace().collect::<Vec<_>>().join(" ");
        let path = Path::new(path);
        let emissions = if path.is_absolute() { path.to_path_buf() } else { base.join(path) };
        out.push(ManifestEntry { id: id.to_string(), emissions, reference });
    }
    Ok(out)
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>, FormatError> {
    let base = path.parent().unwrap_or(Path::new("."));
    parse_manifest(&read(path)?, base, &path.display().to_string())
}
