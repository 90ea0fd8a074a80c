//! Non-interactive Schnorr proof over a Pedersen-style commitment.
//!
//! With `m = digest mod q` the prover publishes `C = g^m h^r` and proves
//! knowledge of `r` such that `C · g^{-m} = h^r`:
//!
//! ```text
//! k ← Z_q,  A = h^k
//! e = H(domain ‖ params ‖ statement ‖ C ‖ A) mod q
//! z = k + e·r mod q
//! verify: h^z == A · (C · g^{-m})^e
//! ```
//!
//! The transcript carries `C`, `A`, `e` and `z` only, so no dataset block
//! reaches the verifier. The statement it proves is knowledge of an opening
//! of a commitment to the committed digest value. Because that digest is
//! public on the ledger, this backend does not prove possession of the
//! underlying blocks; [`super::challenge`] does that without zero knowledge.

use num_bigint::BigUint;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use super::group::GroupParams;
use super::{ProofParams, ProofStatement};
use crate::crypto::{canonical_encode, hash_parts, Decode, DecodeError, Decoder, Encode, Encoder};

const CHALLENGE_DOMAIN: &[u8] = b"flightnft/sigma/challenge";
const NONCE_DOMAIN: &[u8] = b"flightnft/sigma/nonce";

/// Fixed-width big-endian transcript fields; elements are `|p|` bytes and
/// scalars `|q|` bytes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SigmaTranscript {
    pub commitment: Vec<u8>,
    pub announcement: Vec<u8>,
    pub challenge: Vec<u8>,
    pub response: Vec<u8>,
}

impl Encode for SigmaTranscript {
    fn encode(&self, enc: &mut Encoder) {
        enc.bytes(&self.commitment)
            .bytes(&self.announcement)
            .bytes(&self.challenge)
            .bytes(&self.response);
    }
}

impl Decode for SigmaTranscript {
    fn decode(dec: &mut Decoder<'_>) -> Result<Self, DecodeError> {
        Ok(SigmaTranscript {
            commitment: dec.bytes()?,
            announcement: dec.bytes()?,
            challenge: dec.bytes()?,
            response: dec.bytes()?,
        })
    }
}

pub(crate) fn digest_scalar(group: &GroupParams, statement: &ProofStatement) -> BigUint {
    BigUint::from_bytes_be(statement.committed_digest.as_bytes()) % &group.q
}

pub(crate) fn challenge(
    params: &ProofParams,
    statement: &ProofStatement,
    commitment: &[u8],
    announcement: &[u8],
) -> BigUint {
    let group = params.group.as_ref().expect("sigma params carry a group");
    let params_bytes = canonical_encode(params).expect("params hold no floats");
    let statement_bytes = canonical_encode(statement).expect("statement holds no floats");
    let d = hash_parts(&[
        CHALLENGE_DOMAIN,
        &params_bytes,
        &statement_bytes,
        commitment,
        announcement,
    ]);
    BigUint::from_bytes_be(d.as_bytes()) % &group.q
}

pub(crate) fn prove(
    params: &ProofParams,
    group: &GroupParams,
    statement: &ProofStatement,
    randomness_seed: u64,
) -> SigmaTranscript {
    let statement_bytes = canonical_encode(statement).expect("statement holds no floats");
    let seed = hash_parts(&[
        NONCE_DOMAIN,
        params.seed.as_bytes(),
        &statement_bytes,
        &randomness_seed.to_be_bytes(),
    ]);
    let mut rng = ChaCha20Rng::from_seed(seed.0);
    let r = group.random_scalar(&mut rng);
    let k = group.random_scalar(&mut rng);

    let m = digest_scalar(group, statement);
    let c = group.mul(&group.pow(&group.g, &m), &group.pow(&group.h, &r));
    let a = group.pow(&group.h, &k);
    let commitment = group.to_fixed(&c, group.element_len());
    let announcement = group.to_fixed(&a, group.element_len());
    let e = challenge(params, statement, &commitment, &announcement);
    let z = (&k + &e * &r) % &group.q;
    SigmaTranscript {
        commitment,
        announcement,
        challenge: group.to_fixed(&e, group.scalar_len()),
        response: group.to_fixed(&z, group.scalar_len()),
    }
}

fn parse_fixed(bytes: &[u8], len: usize, bound: &BigUint) -> Option<BigUint> {
    if bytes.len() != len {
        return None;
    }
    let x = BigUint::from_bytes_be(bytes);
    (x < *bound).then_some(x)
}

pub(crate) fn verify(
    params: &ProofParams,
    group: &GroupParams,
    statement: &ProofStatement,
    t: &SigmaTranscript,
) -> bool {
    let Some(e) = parse_fixed(&t.challenge, group.scalar_len(), &group.q) else {
        return false;
    };
    // Cheap hash comparison first; exponentiations only for consistent transcripts.
    challenge(params, statement, &t.commitment, &t.announcement) == e
        && satisfies_relation(group, statement, t)
}

/// Honest-verifier simulator: produces a transcript with the same
/// distribution as real proofs without knowing `r`, by choosing the challenge
/// first. It satisfies the verification equation but not the hash-derived
/// challenge, since the simulator controls the challenge.
pub fn simulate(params: &ProofParams, statement: &ProofStatement, seed: u64) -> SigmaTranscript {
    let group = params.group.as_ref().expect("sigma params carry a group");
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let c = group.pow(&group.h, &group.random_scalar(&mut rng));
    let e = group.random_scalar(&mut rng);
    let z = group.random_scalar(&mut rng);
    let m = digest_scalar(group, statement);
    let y = group.mul(&c, &group.inv_pow(&group.g, &m));
    let y_inv_e = group.inv_pow(&y, &e);
    let a = group.mul(&group.pow(&group.h, &z), &y_inv_e);
    SigmaTranscript {
        commitment: group.to_fixed(&c, group.element_len()),
        announcement: group.to_fixed(&a, group.element_len()),
        challenge: group.to_fixed(&e, group.scalar_len()),
        response: group.to_fixed(&z, group.scalar_len()),
    }
}

/// Checks only the algebraic relation `h^z == A · (C g^{-m})^e`, ignoring
/// how `e` was produced. Used to confirm simulated transcripts are valid
/// conversations.
pub fn satisfies_relation(
    group: &GroupParams,
    statement: &ProofStatement,
    t: &SigmaTranscript,
) -> bool {
    let (el, sl) = (group.element_len(), group.scalar_len());
    let (Some(c), Some(a), Some(e), Some(z)) = (
        parse_fixed(&t.commitment, el, &group.p),
        parse_fixed(&t.announcement, el, &group.p),
        parse_fixed(&t.challenge, sl, &group.q),
        parse_fixed(&t.response, sl, &group.q),
    ) else {
        return false;
    };
    let m = digest_scalar(group, statement);
    let y = group.mul(&c, &group.inv_pow(&group.g, &m));
    group.is_member(&c)
        && group.is_member(&a)
        && group.pow(&group.h, &z) == group.mul(&a, &group.pow(&y, &e))
}
