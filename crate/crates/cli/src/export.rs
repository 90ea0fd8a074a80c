use std::collections::BTreeMap;

use flightnft_core::crypto::{derive_key, hash, hash_value, EncryptionSession, NONCE_LEN};
use flightnft_core::privacy::{add_noise, calibrate_sigma, NumericSeries, PrivacyBudget};
use serde_json::Value;

use crate::dataset::FlightFile;
use crate::error::{CliError, Result};

pub const EXPORT_KEY_CONTEXT: &str = "flightnft/privacy-export";

#[derive(Debug, Clone)]
pub struct ExportRequest {
    pub fields: Vec<String>,
    pub epsilon: f64,
    pub delta: f64,
    pub seed: u64,
    /// Explicit clamp bounds per field; missing fields use the observed range.
    pub clamps: BTreeMap<String, (f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldSummary {
    pub field: String,
    pub clamp_lo: f64,
    pub clamp_hi: f64,
    /// True when the bounds came from the data itself.
    pub observed_bounds: bool,
    pub sigma: f64,
}

#[derive(Debug, Clone)]
pub struct Export {
    pub jsonl: String,
    pub fields: Vec<FieldSummary>,
}

/// Noise stream seed for one field: the first eight bytes of
/// `H(encode((seed, field)))`.
pub fn field_seed(seed: u64, field: &str) -> u64 {
    let d = hash_value(&(seed, field.to_string())).expect("no floats");
    u64::from_be_bytes(d.0[..8].try_into().expect("8 bytes"))
}

/// Copies every row in its original column order, replacing each requested
/// field with its clamped and noised value.
pub fn export(file: &FlightFile, req: &ExportRequest) -> Result<Export> {
    if req.fields.is_empty() {
        return Err(CliError::other("no fields selected for export"));
    }
    let mut rows = file.rows.clone();
    let mut summaries = Vec::new();
    for (k, field) in req.fields.iter().enumerate() {
        if req.fields[..k].contains(field) {
            return Err(CliError::other(format!("field {field} listed twice")));
        }
        if field == "timestamp_us" {
            return Err(CliError::other("timestamp_us cannot be noised"));
        }
        let mut values = Vec::with_capacity(rows.len());
        for (i, row) in rows.iter().enumerate() {
            let v = row.get(field).and_then(Value::as_f64).ok_or_else(|| {
                CliError::other(format!("record {}: {field} is not a number", i + 1))
            })?;
            values.push(v);
        }
        let (lo, hi, observed) = match req.clamps.get(field) {
            Some(&(lo, hi)) => (lo, hi, false),
            None => {
                let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                (lo, hi, true)
            }
        };
        let series = NumericSeries::new(values, lo, hi, field)
            .map_err(|e| CliError::other(format!("{field}: {e}")))?;
        let budget = PrivacyBudget {
            epsilon: req.epsilon,
            delta: req.delta,
            sensitivity: series.sensitivity(),
        };
        let sigma =
            calibrate_sigma(&budget).map_err(|e| CliError::other(format!("{field}: {e}")))?;
        let noised = add_noise(&series, sigma, field_seed(req.seed, field))
            .map_err(|e| CliError::other(format!("{field}: {e}")))?;
        for (row, v) in rows.iter_mut().zip(noised.values) {
            let n = serde_json::Number::from_f64(v)
                .ok_or_else(|| CliError::other(format!("{field}: noised value is not finite")))?;
            row.insert(field.clone(), Value::Number(n));
        }
        summaries.push(FieldSummary {
            field: field.clone(),
            clamp_lo: lo,
            clamp_hi: hi,
            observed_bounds: observed,
            sigma,
        });
    }
    let mut jsonl = String::new();
    for row in &rows {
        jsonl.push_str(&serde_json::to_string(row).expect("JSON maps serialize"));
        jsonl.push('\n');
    }
    Ok(Export {
        jsonl,
        fields: summaries,
    })
}

/// AES-256-GCM under a key derived from `seed`, as `nonce ‖ body ‖ tag`. The
/// nonce is taken from the plaintext digest, so distinct plaintexts never
/// share a nonce under one key.
pub fn encrypt_export(plaintext: &[u8], seed: &str) -> Result<Vec<u8>> {
    let key = derive_key(seed.as_bytes(), EXPORT_KEY_CONTEXT)
        .map_err(|e| CliError::other(e.to_string()))?;
    let mut nonce = [0u8; NONCE_LEN];
    nonce.copy_from_slice(&hash(plaintext).0[..NONCE_LEN]);
    let ct = EncryptionSession::new(key)
        .encrypt(plaintext, nonce)
        .map_err(|e| CliError::other(e.to_string()))?;
    Ok(ct.to_bytes())
}
