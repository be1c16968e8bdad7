//! JSON-lines record files with a header line, and small file helpers.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::rb::{RbDataset, RbEntry};
use crate::simulator::ExperimentRecord;

pub const RECORDS_TYPE: &str = "fbt_records";
pub const RB_TYPE: &str = "rb";

/// First line of every JSON-lines file, and the `header` field of JSON outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileHeader {
    #[serde(rename = "type")]
    pub kind: String,
    pub version: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
    /// RB files: Clifford length of each record, in order.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clifford_lengths: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pulses_per_clifford: Option<f64>,
}

impl FileHeader {
    pub fn new(kind: &str, seed: Option<u64>, config_hash: Option<String>) -> Self {
        Self {
            kind: kind.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            config_hash,
            clifford_lengths: None,
            pulses_per_clifford: None,
        }
    }

    /// One-line comment form for CSV files.
    pub fn csv_comment(&self) -> String {
        format!(
            "# fbt {} seed={} config_hash={}\n",
            self.version,
            self.seed.map(|s| s.to_string()).unwrap_or_default(),
            self.config_hash.as_deref().unwrap_or("")
        )
    }
}

/// Hex SHA-256 of a serialisable config.
pub fn config_hash<T: Serialize>(config: &T) -> Result<String> {
    let bytes = serde_json::to_vec(config)?;
    let digest = Sha256::digest(&bytes);
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

pub fn write_records<W: Write>(mut w: W, header: Option<&FileHeader>, records: &[ExperimentRecord]) -> Result<()> {
    if let Some(h) = header {
        serde_json::to_writer(&mut w, h)?;
        w.write_all(b"\n")?;
    }
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_records_file(path: &Path, header: Option<&FileHeader>, records: &[ExperimentRecord]) -> Result<()> {
    write_records(BufWriter::new(File::create(path)?), header, records)
}

/// Parsed record file: optional header and records with their 1-based lines.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordFile {
    pub header: Option<FileHeader>,
    pub records: Vec<ExperimentRecord>,
    pub lines: Vec<usize>,
}

/// Read a JSON-lines record stream. Blank lines are skipped; a header is
/// accepted only on the first non-blank line.
pub fn read_records<R: BufRead>(reader: R) -> Result<RecordFile> {
    let mut header = None;
    let mut records = Vec::new();
    let mut lines = Vec::new();
    let mut first = true;
    for (k, line) in reader.lines().enumerate() {
        let line_no = k + 1;
        let line = line.map_err(|e| Error::Data { line: line_no, message: e.to_string() })?;
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::Data { line: line_no, message: e.to_string() })?;
        if first && value.get("type").is_some() {
            header = Some(
                serde_json::from_value(value).map_err(|e| Error::Data { line: line_no, message: format!("header: {e}") })?,
            );
            first = false;
            continue;
        }
        first = false;
        let record: ExperimentRecord =
            serde_json::from_value(value).map_err(|e| Error::Data { line: line_no, message: e.to_string() })?;
        records.push(record);
        lines.push(line_no);
    }
    Ok(RecordFile { header, records, lines })
}

pub fn read_records_file(path: &Path) -> Result<RecordFile> {
    let f = File::open(path).map_err(|e| Error::Data { line: 0, message: format!("{}: {e}", path.display()) })?;
    read_records(BufReader::new(f))
}

impl RecordFile {
    /// Validate every record against the outcome count and gate count,
    /// reporting failures by line.
    pub fn validate(&self, n_outcomes: usize, n_gates: usize) -> Result<()> {
        for (r, &line) in self.records.iter().zip(&self.lines) {
            r.validate(n_outcomes).map_err(|e| Error::Data { line, message: e.to_string() })?;
            if let Some(&g) = r.seq.iter().find(|&&g| g >= n_gates) {
                return Err(Error::Data { line, message: format!("gate index {g} out of range for {n_gates} gates") });
            }
        }
        Ok(())
    }
}

pub fn write_rb_file(path: &Path, mut header: FileHeader, data: &RbDataset) -> Result<()> {
    header.kind = RB_TYPE.to_string();
    header.clifford_lengths = Some(data.clifford_lengths());
    header.pulses_per_clifford = Some(data.pulses_per_clifford);
    let records: Vec<ExperimentRecord> = data.entries.iter().map(|e| e.record.clone()).collect();
    write_records_file(path, Some(&header), &records)
}

/// Read an RB file; its header must list one Clifford length per record.
/// `pulses_per_clifford` is used when the header lacks it.
pub fn read_rb_file(path: &Path, pulses_per_clifford: f64) -> Result<(FileHeader, RbDataset)> {
    let file = read_records_file(path)?;
    let header = file.header.ok_or(Error::Data { line: 1, message: "RB file has no header".into() })?;
    if header.kind != RB_TYPE {
        return Err(Error::Data { line: 1, message: format!("expected an {RB_TYPE:?} header, found {:?}", header.kind) });
    }
    let lengths = header
        .clifford_lengths
        .clone()
        .ok_or(Error::Data { line: 1, message: "RB header has no clifford_lengths".into() })?;
    if lengths.len() != file.records.len() {
        return Err(Error::Data {
            line: 1,
            message: format!("header lists {} lengths for {} records", lengths.len(), file.records.len()),
        });
    }
    let entries = lengths
        .into_iter()
        .zip(file.records)
        .map(|(clifford_length, record)| RbEntry { clifford_length, record })
        .collect();
    let ppc = header.pulses_per_clifford.unwrap_or(pulses_per_clifford);
    let data = RbDataset::new(entries, ppc).map_err(|e| Error::Data { line: 0, message: e.to_string() })?;
    Ok((header, data))
}

/// Parse a JSON config; any failure, including a missing file, is a config error.
pub fn read_json_config<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}
