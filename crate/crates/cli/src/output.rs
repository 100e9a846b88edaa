// Copyright 2026 Compulse Contributors
// SPDX-License-Identifier: Apache-2.0

//! File formats. CSV fields use `.` decimals, LF line endings and 17
//! significant digits; missing values are written as `nan`.

use std::fmt::Write as _;
use std::path::{Component, Path, PathBuf};

use compulse_core::{PulseSegment, PulseSequence};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::CliError;

pub const MANIFEST_VERSION: u32 = 1;

/// One CSV cell.
pub enum Cell {
    Float(f64),
    Int(i64),
    Missing,
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Missing, Cell::Float)
    }
}

impl From<u32> for Cell {
    fn from(x: u32) -> Self {
        Cell::Int(i64::from(x))
    }
}

pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

/// Accumulates a CSV document in memory.
pub struct Csv {
    text: String,
    width: usize,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Csv { text: format!("{}\n", header.join(",")), width: header.len() }
    }

    pub fn row(&mut self, cells: Vec<Cell>) {
        debug_assert_eq!(cells.len(), self.width);
        let fields: Vec<String> = cells
            .into_iter()
            .map(|c| match c {
                Cell::Float(x) => format_float(x),
                Cell::Int(i) => i.to_string(),
                Cell::Missing => "nan".into(),
            })
            .collect();
        let _ = writeln!(self.text, "{}", fields.join(","));
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.text.into_bytes()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputRecord {
    pub file: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub manifest_version: u32,
    pub command: String,
    pub config: RunConfig,
    pub outputs: Vec<OutputRecord>,
}

/// Collects output files and writes them, in order, under one directory.
pub struct OutputSet {
    dir: PathBuf,
    files: Vec<(String, Vec<u8>)>,
}

impl OutputSet {
    pub fn new(dir: &Path) -> Self {
        OutputSet { dir: dir.to_path_buf(), files: Vec::new() }
    }

    pub fn add(&mut self, name: &str, bytes: Vec<u8>) {
        debug_assert!(is_plain_file_name(name));
        self.files.push((name.to_string(), bytes));
    }

    pub fn add_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        self.add(name, to_json_bytes(value)?);
        Ok(())
    }

    /// Writes every file plus `<command>.manifest.json`.
    pub fn write(self, command: &str, config: &RunConfig) -> Result<Vec<PathBuf>, CliError> {
        std::fs::create_dir_all(&self.dir)
            .map_err(|e| CliError::runtime(format!("cannot create {}: {e}", self.dir.display())))?;
        let mut written = Vec::new();
        let mut outputs = Vec::new();
        for (name, bytes) in &self.files {
            let path = self.dir.join(name);
            std::fs::write(&path, bytes)
                .map_err(|e| CliError::runtime(format!("cannot write {}: {e}", path.display())))?;
            outputs.push(OutputRecord { file: name.clone(), sha256: sha256_hex(bytes) });
            written.push(path);
        }
        let manifest =
            Manifest { manifest_version: MANIFEST_VERSION, command: command.into(), config: config.clone(), outputs };
        let path = self.dir.join(format!("{command}.manifest.json"));
        std::fs::write(&path, to_json_bytes(&manifest)?)
            .map_err(|e| CliError::runtime(format!("cannot write {}: {e}", path.display())))?;
        written.push(path);
        Ok(written)
    }
}

fn is_plain_file_name(name: &str) -> bool {
    let mut parts = Path::new(name).components();
    matches!(parts.next(), Some(Component::Normal(_))) && parts.next().is_none()
}

pub fn to_json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>, CliError> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| CliError::runtime(e.to_string()))?;
    bytes.push(b'\n');
    Ok(bytes)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentJson {
    pub angle_rad: f64,
    pub phase_rad: f64,
    pub amp: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseJson {
    pub label: String,
    pub segments: Vec<SegmentJson>,
}

impl From<&PulseSequence> for PulseJson {
    fn from(p: &PulseSequence) -> Self {
        PulseJson {
            label: p.label().to_string(),
            segments: p
                .segments()
                .iter()
                .map(|s| SegmentJson { angle_rad: s.angle, phase_rad: s.phase, amp: s.amp })
                .collect(),
        }
    }
}

impl PulseJson {
    pub fn to_sequence(&self) -> Result<PulseSequence, CliError> {
        let segments = self
            .segments
            .iter()
            .map(|s| PulseSegment::new(s.angle_rad, s.phase_rad, s.amp))
            .collect::<Result<Vec<_>, _>>()
            .map_err(CliError::config)?;
        PulseSequence::new(self.label.clone(), segments).map_err(CliError::config)
    }
}

pub fn read_pulse_file(path: &Path) -> Result<PulseSequence, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read pulse file {}: {e}", path.display())))?;
    let json: PulseJson = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("invalid pulse file {}: {e}", path.display())))?;
    json.to_sequence()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_is_fixed_width_scientific() {
        assert_eq!(format_float(0.1), "1.0000000000000001e-1");
        assert_eq!(format_float(-2.0), "-2.0000000000000000e0");
        assert_eq!(format_float(f64::NAN), "nan");
        let x = 0.123_456_789_012_345_67;
        assert_eq!(format_float(x).parse::<f64>().unwrap(), x);
    }

    #[test]
    fn csv_rows_end_in_lf() {
        let mut c = Csv::new(&["a", "b"]);
        c.row(vec![Cell::Int(3), Cell::Missing]);
        assert_eq!(String::from_utf8(c.into_bytes()).unwrap(), "a,b\n3,nan\n");
    }

    #[test]
    fn only_plain_names_are_outputs() {
        assert!(is_plain_file_name("fig3e.csv"));
        assert!(!is_plain_file_name("../x.csv"));
        assert!(!is_plain_file_name("/tmp/x.csv"));
        assert!(!is_plain_file_name("a/b.csv"));
    }

    #[test]
    fn pulse_json_roundtrip() {
        let p = compulse_core::pulse::reference_composite_pi();
        let json = PulseJson::from(&p);
        let text = serde_json::to_string(&json).unwrap();
        let back: PulseJson = serde_json::from_str(&text).unwrap();
        assert_eq!(back.to_sequence().unwrap(), p);
    }

    #[test]
    fn sha256_known_vector() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }
}
