//! Text persistence for the transaction log.
//!
//! ```text
//! <genesis digest, 64 lowercase hex chars>
//! <canonical encoding of transaction 1, lowercase hex>
//! ...
//! <canonical encoding of transaction n, lowercase hex>
//! head <head digest after transaction n>
//! ```
//!
//! Every line ends in `\n`. Hex must be lowercase so each log has exactly one
//! textual form.

use thiserror::Error;

use super::{chain_digest, genesis_digest, replay, LedgerState, LedgerTransaction, ReplayError};
use crate::crypto::{canonical_decode, canonical_encode, decode_lower_hex, Digest};

const HEAD_PREFIX: &str = "head ";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LogFileError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("chain mismatch: recorded head {recorded}, recomputed {computed}")]
    ChainMismatch { recorded: Digest, computed: Digest },
    #[error(transparent)]
    Replay(#[from] ReplayError),
}

fn parse_err(line: usize, reason: impl Into<String>) -> LogFileError {
    LogFileError::Parse {
        line,
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogFile {
    pub transactions: Vec<LedgerTransaction>,
    /// Raw canonical bytes of each transaction as read from disk.
    pub encoded: Vec<Vec<u8>>,
    pub recorded_head: Digest,
}

pub fn render(state: &LedgerState) -> String {
    let mut out = String::new();
    out.push_str(&genesis_digest().to_hex());
    out.push('\n');
    for tx in state.log() {
        out.push_str(
            &canonical_encode(tx)
                .expect("logged transactions encode")
                .to_hex(),
        );
        out.push('\n');
    }
    out.push_str(HEAD_PREFIX);
    out.push_str(&state.head_digest.to_hex());
    out.push('\n');
    out
}

pub fn parse(text: &str) -> Result<LogFile, LogFileError> {
    let Some(body) = text.strip_suffix('\n') else {
        return Err(parse_err(0, "log must end with a newline"));
    };
    let lines: Vec<&str> = body.split('\n').collect();
    if lines.len() < 2 {
        return Err(parse_err(
            lines.len(),
            "log needs a genesis line and a head line",
        ));
    }
    let genesis = Digest::from_hex(lines[0]).map_err(|e| parse_err(1, e.to_string()))?;
    if genesis != genesis_digest() {
        return Err(parse_err(1, "genesis digest does not match"));
    }
    let last = lines.len() - 1;
    let head_hex = lines[last]
        .strip_prefix(HEAD_PREFIX)
        .ok_or_else(|| parse_err(last + 1, "expected head line"))?;
    let recorded_head =
        Digest::from_hex(head_hex).map_err(|e| parse_err(last + 1, e.to_string()))?;

    let mut transactions = Vec::with_capacity(last - 1);
    let mut encoded = Vec::with_capacity(last - 1);
    for (i, line) in lines[1..last].iter().enumerate() {
        let line_no = i + 2;
        let bytes = decode_lower_hex(line).ok_or_else(|| parse_err(line_no, "invalid hex"))?;
        let tx: LedgerTransaction =
            canonical_decode(&bytes).map_err(|e| parse_err(line_no, e.to_string()))?;
        if canonical_encode(&tx).map(|b| b.into_vec()).as_deref() != Ok(bytes.as_slice()) {
            return Err(parse_err(line_no, "non-canonical transaction encoding"));
        }
        transactions.push(tx);
        encoded.push(bytes);
    }
    Ok(LogFile {
        transactions,
        encoded,
        recorded_head,
    })
}

/// Recomputes the hash chain without executing anything.
pub fn verify_chain(text: &str) -> Result<LogFile, LogFileError> {
    let log = parse(text)?;
    let computed = log
        .encoded
        .iter()
        .fold(genesis_digest(), |head, bytes| chain_digest(&head, bytes));
    if computed != log.recorded_head {
        return Err(LogFileError::ChainMismatch {
            recorded: log.recorded_head,
            computed,
        });
    }
    Ok(log)
}

/// Verifies the chain and re-executes every transaction.
pub fn replay_text(text: &str) -> Result<LedgerState, LogFileError> {
    let log = verify_chain(text)?;
    let state = replay(&log.transactions)?;
    if state.head_digest != log.recorded_head {
        return Err(LogFileError::ChainMismatch {
            recorded: log.recorded_head,
            computed: state.head_digest,
        });
    }
    Ok(state)
}
