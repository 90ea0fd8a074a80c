//! Hashing, key derivation, authenticated encryption and the canonical
//! encoding that makes hashing structured values well defined.

mod aead;
pub mod canonical;

use std::cell::Cell;
use std::fmt;

use hkdf::Hkdf;
use sha2::{Digest as _, Sha256};
use thiserror::Error;

pub use aead::{decrypt, Ciphertext, EncryptionSession, NONCE_LEN, TAG_LEN};
pub use canonical::{
    canonical_decode, canonical_encode, CanonicalBytes, Decode, DecodeError, Decoder, Encode,
    EncodeError, Encoder,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CryptoError {
    #[error("key derivation seed must not be empty")]
    EmptySeed,
    #[error("nonce already used with this key in this session")]
    NonceReuse,
    #[error("authentication failed: ciphertext was tampered with or the key is wrong")]
    Authentication,
    #[error("invalid hex digest: {0}")]
    InvalidHex(String),
}

/// 32-byte SHA-256 output.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Digest(pub [u8; 32]);

impl Digest {
    pub const LEN: usize = 32;

    pub fn as_bytes(&self) -> &[u8; 32] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    /// Parses exactly 64 lowercase hex characters.
    pub fn from_hex(s: &str) -> Result<Self, CryptoError> {
        let bytes = decode_lower_hex(s).ok_or_else(|| CryptoError::InvalidHex(s.to_string()))?;
        let arr: [u8; 32] = bytes
            .try_into()
            .map_err(|_| CryptoError::InvalidHex(s.to_string()))?;
        Ok(Digest(arr))
    }

    /// Number of differing bits between two digests.
    pub fn hamming_distance(&self, other: &Digest) -> u32 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a ^ b).count_ones())
            .sum()
    }
}

impl fmt::Display for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl fmt::Debug for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Digest({})", self.to_hex())
    }
}

impl Encode for Digest {
    fn encode(&self, enc: &mut Encoder) {
        enc.raw(&self.0);
    }
}

impl Decode for Digest {
    fn decode(dec: &mut Decoder<'_>) -> Result<Self, DecodeError> {
        Ok(Digest(dec.array()?))
    }
}

/// Strict lowercase hex; uppercase digits are rejected so every byte string
/// has exactly one textual form.
pub fn decode_lower_hex(s: &str) -> Option<Vec<u8>> {
    if s.bytes().any(|b| !matches!(b, b'0'..=b'9' | b'a'..=b'f')) {
        return None;
    }
    hex::decode(s).ok()
}

thread_local! {
    static HASH_CALLS: Cell<u64> = const { Cell::new(0) };
}

/// Number of hash invocations made on the current thread so far.
pub fn hash_invocations() -> u64 {
    HASH_CALLS.with(|c| c.get())
}

/// SHA-256 of `data`.
pub fn hash(data: &[u8]) -> Digest {
    hash_parts(&[data])
}

/// SHA-256 of the concatenation of `parts`, counted as one invocation.
pub fn hash_parts(parts: &[&[u8]]) -> Digest {
    HASH_CALLS.with(|c| c.set(c.get() + 1));
    let mut h = Sha256::new();
    for p in parts {
        h.update(p);
    }
    Digest(h.finalize().into())
}

/// Hash of the canonical encoding of `value`.
pub fn hash_value<T: Encode + ?Sized>(value: &T) -> Result<Digest, EncodeError> {
    Ok(hash(&canonical_encode(value)?))
}

/// 256-bit symmetric key. Deliberately has no `Encode` impl so it cannot end
/// up in the ledger or any other persisted artifact.
#[derive(Clone, PartialEq, Eq)]
pub struct SymmetricKey([u8; 32]);

impl SymmetricKey {
    pub fn from_bytes(bytes: [u8; 32]) -> Self {
        SymmetricKey(bytes)
    }

    pub fn as_bytes(&self) -> &[u8; 32] {
        &self.0
    }
}

impl fmt::Debug for SymmetricKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("SymmetricKey(..)")
    }
}

/// HKDF-SHA256 with `context` as the info label.
pub fn derive_key(seed: &[u8], context: &str) -> Result<SymmetricKey, CryptoError> {
    if seed.is_empty() {
        return Err(CryptoError::EmptySeed);
    }
    let hk = Hkdf::<Sha256>::new(Some(b"flightnft/derive-key/v1"), seed);
    let mut okm = [0u8; 32];
    hk.expand(context.as_bytes(), &mut okm)
        .expect("32 bytes is a valid HKDF-SHA256 output length");
    Ok(SymmetricKey(okm))
}
