//! Probabilistic possession proof by Merkle sampling.
//!
//! Challenge indices are `u64(H(domain ‖ encode(seed) ‖ encode(statement) ‖ round)[..8]) mod n`
//! for `round = 0..c`, so prover and verifier agree without interaction. The
//! prover opens each challenged block with its inclusion proof. This reveals
//! the sampled blocks to the verifier and is therefore not zero-knowledge.
//! A prover missing `k` of `n` blocks passes with probability `((n - k) / n)^c`.

use super::{ProofParams, ProofStatement};
use crate::crypto::{canonical_encode, hash_parts, Decode, DecodeError, Decoder, Encode, Encoder};
use crate::merkle::{verify_inclusion, DataBlock, MerkleProof, MerkleTree};

const CHALLENGE_DOMAIN: &[u8] = b"flightnft/merkle-challenge";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChallengeOpening {
    pub index: u64,
    pub block: DataBlock,
    pub proof: MerkleProof,
}

impl Encode for ChallengeOpening {
    fn encode(&self, enc: &mut Encoder) {
        enc.u64(self.index).value(&self.block).value(&self.proof);
    }
}

impl Decode for ChallengeOpening {
    fn decode(dec: &mut Decoder<'_>) -> Result<Self, DecodeError> {
        Ok(ChallengeOpening {
            index: dec.u64()?,
            block: dec.value()?,
            proof: dec.value()?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChallengeTranscript {
    pub openings: Vec<ChallengeOpening>,
}

impl Encode for ChallengeTranscript {
    fn encode(&self, enc: &mut Encoder) {
        enc.seq(&self.openings);
    }
}

impl Decode for ChallengeTranscript {
    fn decode(dec: &mut Decoder<'_>) -> Result<Self, DecodeError> {
        Ok(ChallengeTranscript {
            openings: dec.seq()?,
        })
    }
}

/// The `challenge_count` leaf indices a prover must open. Empty when the
/// statement declares zero leaves.
pub fn challenge_indices(params: &ProofParams, statement: &ProofStatement) -> Vec<u64> {
    if statement.leaf_count == 0 {
        return Vec::new();
    }
    let seed_bytes = canonical_encode(params.seed.as_str()).expect("strings encode");
    let statement_bytes = canonical_encode(statement).expect("statement holds no floats");
    (0..params.challenge_count)
        .map(|round| {
            let d = hash_parts(&[
                CHALLENGE_DOMAIN,
                &seed_bytes,
                &statement_bytes,
                &round.to_be_bytes(),
            ]);
            let word = u64::from_be_bytes(d.0[..8].try_into().expect("8 bytes"));
            word % statement.leaf_count
        })
        .collect()
}

pub(crate) fn prove(
    tree: &MerkleTree,
    blocks: &[DataBlock],
    params: &ProofParams,
    statement: &ProofStatement,
) -> ChallengeTranscript {
    let openings = challenge_indices(params, statement)
        .into_iter()
        .map(|index| ChallengeOpening {
            index,
            block: blocks[index as usize].clone(),
            proof: tree
                .inclusion_proof(index)
                .expect("challenge index within tree"),
        })
        .collect();
    ChallengeTranscript { openings }
}

pub(crate) fn verify(
    params: &ProofParams,
    statement: &ProofStatement,
    transcript: &ChallengeTranscript,
) -> bool {
    let expected = challenge_indices(params, statement);
    if expected.is_empty() || transcript.openings.len() != expected.len() {
        return false;
    }
    transcript
        .openings
        .iter()
        .zip(&expected)
        .all(|(opening, &index)| {
            opening.index == index
                && opening.proof.leaf_index == index
                && opening.proof.leaf_count == statement.leaf_count
                && verify_inclusion(&statement.committed_digest, &opening.block, &opening.proof)
        })
}
