use std::collections::HashSet;

use aes_gcm::aead::{Aead, KeyInit};
use aes_gcm::{Aes256Gcm, Key, Nonce};

use super::{CryptoError, SymmetricKey};

pub const NONCE_LEN: usize = 12;
pub const TAG_LEN: usize = 16;

/// AES-256-GCM output split into its three parts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ciphertext {
    pub nonce: [u8; NONCE_LEN],
    pub body: Vec<u8>,
    pub auth_tag: [u8; TAG_LEN],
}

impl Ciphertext {
    /// `nonce ‖ body ‖ tag`.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(NONCE_LEN + self.body.len() + TAG_LEN);
        out.extend_from_slice(&self.nonce);
        out.extend_from_slice(&self.body);
        out.extend_from_slice(&self.auth_tag);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Option<Self> {
        if bytes.len() < NONCE_LEN + TAG_LEN {
            return None;
        }
        let (nonce, rest) = bytes.split_at(NONCE_LEN);
        let (body, tag) = rest.split_at(rest.len() - TAG_LEN);
        Some(Ciphertext {
            nonce: nonce.try_into().ok()?,
            body: body.to_vec(),
            auth_tag: tag.try_into().ok()?,
        })
    }
}

/// Encryption under one key, refusing to reuse a nonce for the lifetime of
/// the session.
#[derive(Debug)]
pub struct EncryptionSession {
    key: SymmetricKey,
    used_nonces: HashSet<[u8; NONCE_LEN]>,
}

impl EncryptionSession {
    pub fn new(key: SymmetricKey) -> Self {
        Self {
            key,
            used_nonces: HashSet::new(),
        }
    }

    pub fn encrypt(
        &mut self,
        plaintext: &[u8],
        nonce: [u8; NONCE_LEN],
    ) -> Result<Ciphertext, CryptoError> {
        if !self.used_nonces.insert(nonce) {
            return Err(CryptoError::NonceReuse);
        }
        let cipher = cipher(&self.key);
        let mut sealed = cipher
            .encrypt(Nonce::from_slice(&nonce), plaintext)
            .expect("AES-GCM encryption of in-memory buffers does not fail");
        let tag_bytes = sealed.split_off(sealed.len() - TAG_LEN);
        let mut auth_tag = [0u8; TAG_LEN];
        auth_tag.copy_from_slice(&tag_bytes);
        Ok(Ciphertext {
            nonce,
            body: sealed,
            auth_tag,
        })
    }

    pub fn decrypt(&self, ct: &Ciphertext) -> Result<Vec<u8>, CryptoError> {
        decrypt(&self.key, ct)
    }
}

pub fn decrypt(key: &SymmetricKey, ct: &Ciphertext) -> Result<Vec<u8>, CryptoError> {
    let mut sealed = Vec::with_capacity(ct.body.len() + TAG_LEN);
    sealed.extend_from_slice(&ct.body);
    sealed.extend_from_slice(&ct.auth_tag);
    cipher(key)
        .decrypt(Nonce::from_slice(&ct.nonce), sealed.as_slice())
        .map_err(|_| CryptoError::Authentication)
}

fn cipher(key: &SymmetricKey) -> Aes256Gcm {
    Aes256Gcm::new(Key::<Aes256Gcm>::from_slice(key.as_bytes()))
}
