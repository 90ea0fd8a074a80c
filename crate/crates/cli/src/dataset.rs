use std::collections::BTreeMap;
use std::path::Path;

use flightnft_core::crypto::{canonical_encode, Digest, Encode, Encoder};
use flightnft_core::merkle::{build_tree, DataBlock, MerkleTree};
use serde_json::{Map, Value};

use crate::error::{read_text, CliError, Result};

pub const POSITION_FIELDS: [&str; 3] = ["x", "y", "z"];

#[derive(Debug, Clone, PartialEq)]
pub enum FieldValue {
    Number(f64),
    Text(String),
}

/// One line of a flight record file.
#[derive(Debug, Clone, PartialEq)]
pub struct FlightRecord {
    pub timestamp_us: u64,
    pub position: [f64; 3],
    /// Remaining fields, keyed by name.
    pub fields: BTreeMap<String, FieldValue>,
}

impl Encode for FlightRecord {
    fn encode(&self, enc: &mut Encoder) {
        enc.u64(self.timestamp_us);
        for c in self.position {
            enc.f64(c);
        }
        enc.len(self.fields.len());
        for (name, value) in &self.fields {
            enc.str(name);
            match value {
                FieldValue::Number(v) => enc.u8(0).f64(*v),
                FieldValue::Text(s) => enc.u8(1).str(s),
            };
        }
    }
}

/// A parsed flight record file. `rows` keeps each line's original column
/// order for column-preserving exports.
#[derive(Debug, Clone)]
pub struct FlightFile {
    pub records: Vec<FlightRecord>,
    pub rows: Vec<Map<String, Value>>,
}

impl FlightFile {
    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&read_text(path)?, path)
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut records = Vec::new();
        let mut rows = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let n = i + 1;
            let row: Map<String, Value> = serde_json::from_str(line)
                .map_err(|e| CliError::parse(path, n, format!("invalid record: {e}")))?;
            let record = record_from_row(&row).map_err(|r| CliError::parse(path, n, r))?;
            if let Some(prev) = records.last() {
                let prev: &FlightRecord = prev;
                if record.timestamp_us < prev.timestamp_us {
                    return Err(CliError::parse(
                        path,
                        n,
                        format!(
                            "timestamp_us {} is earlier than the previous {}",
                            record.timestamp_us, prev.timestamp_us
                        ),
                    ));
                }
            }
            records.push(record);
            rows.push(row);
        }
        if records.is_empty() {
            return Err(CliError::parse(path, 1, "file contains no records"));
        }
        Ok(FlightFile { records, rows })
    }
}

fn record_from_row(row: &Map<String, Value>) -> std::result::Result<FlightRecord, String> {
    let timestamp_us = row
        .get("timestamp_us")
        .ok_or("missing timestamp_us")?
        .as_u64()
        .ok_or("timestamp_us must be an unsigned integer")?;
    let mut position = [0.0; 3];
    for (slot, name) in position.iter_mut().zip(POSITION_FIELDS) {
        *slot = finite(row.get(name).ok_or(format!("missing {name}"))?, name)?;
    }
    let mut fields = BTreeMap::new();
    for (name, value) in row {
        if name == "timestamp_us" || POSITION_FIELDS.contains(&name.as_str()) {
            continue;
        }
        let value = match value {
            Value::String(s) => FieldValue::Text(s.clone()),
            other => FieldValue::Number(finite(other, name)?),
        };
        fields.insert(name.clone(), value);
    }
    Ok(FlightRecord {
        timestamp_us,
        position,
        fields,
    })
}

fn finite(value: &Value, name: &str) -> std::result::Result<f64, String> {
    value
        .as_f64()
        .filter(|v| v.is_finite())
        .ok_or(format!("{name} must be a finite number"))
}

/// Records chunked into Merkle leaves.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub blocks: Vec<DataBlock>,
    pub tree: MerkleTree,
    pub record_count: usize,
    pub start_time: u64,
    pub end_time: u64,
}

impl Dataset {
    /// Blocks of at most `chunk_size` records in file order. A block's
    /// timestamp is that of its first record; its payload is the canonical
    /// encoding of its records.
    pub fn from_records(records: &[FlightRecord], chunk_size: usize) -> Result<Self> {
        if chunk_size == 0 {
            return Err(CliError::other("chunk size must be at least 1"));
        }
        let mut blocks = Vec::new();
        for (i, chunk) in records.chunks(chunk_size).enumerate() {
            let payload = canonical_encode(chunk)
                .map_err(|e| CliError::other(format!("cannot encode records: {e}")))?
                .into_vec();
            blocks.push(DataBlock {
                index: i as u64,
                timestamp: chunk[0].timestamp_us,
                payload,
            });
        }
        let tree = build_tree(&blocks).map_err(|e| CliError::other(e.to_string()))?;
        Ok(Dataset {
            tree,
            record_count: records.len(),
            start_time: records.first().map_or(0, |r| r.timestamp_us),
            end_time: records.last().map_or(0, |r| r.timestamp_us),
            blocks,
        })
    }

    pub fn load(path: &Path, chunk_size: usize) -> Result<Self> {
        Self::from_records(&FlightFile::load(path)?.records, chunk_size)
    }

    pub fn root(&self) -> Digest {
        self.tree.root()
    }

    pub fn block_count(&self) -> u64 {
        self.blocks.len() as u64
    }
}
