//! Setup / prove / verify for possession proofs against a token's committed
//! dataset root, with two backends:
//!
//! * [`Backend::SigmaCommit`]: zero-knowledge Schnorr proof about a group
//!   commitment to the committed digest. Reveals no blocks.
//! * [`Backend::MerkleChallenge`]: opens `challenge_count` hash-selected
//!   blocks with inclusion proofs. Proves possession but is not
//!   zero-knowledge.
//!
//! Proof wire format: `backend tag (0x01 sigma, 0x02 merkle) ‖ zero-knowledge
//! flag (0x01 / 0x00) ‖ canonical transcript fields`.

pub mod challenge;
pub mod group;
pub mod sigma;

use thiserror::Error;

use crate::crypto::{
    canonical_decode, canonical_encode, hash, Decode, DecodeError, Decoder, Digest, Encode, Encoder,
};
use crate::ledger::{Effect, LedgerState, Revert, TxContext};
use crate::merkle::{DataBlock, MerkleTree};
use crate::registry::{self, REVERT_UNKNOWN_TOKEN};

pub use challenge::{challenge_indices, ChallengeOpening, ChallengeTranscript};
pub use group::{GroupChoice, GroupParams};
pub use sigma::SigmaTranscript;

pub const REVERT_NOT_AUTHORIZED_TO_ANCHOR: &str = "not authorized to anchor";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProofError {
    #[error("invalid proof configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("statement mismatch")]
    StatementMismatch,
    #[error("malformed proof bytes: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Backend {
    SigmaCommit,
    MerkleChallenge,
}

impl Backend {
    pub fn tag(self) -> u8 {
        match self {
            Backend::SigmaCommit => 0x01,
            Backend::MerkleChallenge => 0x02,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0x01 => Some(Backend::SigmaCommit),
            0x02 => Some(Backend::MerkleChallenge),
            _ => None,
        }
    }

    pub fn is_zero_knowledge(self) -> bool {
        matches!(self, Backend::SigmaCommit)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Backend::SigmaCommit => "sigma",
            Backend::MerkleChallenge => "merkle",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SecurityConfig {
    pub backend: Backend,
    pub group: GroupChoice,
    pub challenge_count: u64,
    /// Domain label mixed into generator derivation and transcript hashes.
    pub seed: String,
}

impl SecurityConfig {
    pub fn sigma(seed: &str) -> Self {
        SecurityConfig {
            backend: Backend::SigmaCommit,
            group: GroupChoice::Standard2048,
            challenge_count: 1,
            seed: seed.to_string(),
        }
    }

    pub fn merkle(seed: &str, challenge_count: u64) -> Self {
        SecurityConfig {
            backend: Backend::MerkleChallenge,
            group: GroupChoice::Standard2048,
            challenge_count,
            seed: seed.to_string(),
        }
    }
}

/// Public parameters; safe to publish and anchor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProofParams {
    pub backend: Backend,
    /// Present for `SigmaCommit` only.
    pub group: Option<GroupParams>,
    pub challenge_count: u64,
    pub seed: String,
}

impl ProofParams {
    pub fn validate(&self) -> Result<(), ProofError> {
        if self.challenge_count == 0 {
            return Err(ProofError::InvalidConfig(
                "challenge_count must be at least 1",
            ));
        }
        if self.seed.is_empty() {
            return Err(ProofError::InvalidConfig("seed label must not be empty"));
        }
        match (self.backend, &self.group) {
            (Backend::SigmaCommit, Some(g)) if g.is_well_formed() => Ok(()),
            (Backend::SigmaCommit, _) => {
                Err(ProofError::InvalidConfig("malformed group parameters"))
            }
            (Backend::MerkleChallenge, None) => Ok(()),
            (Backend::MerkleChallenge, Some(_)) => {
                Err(ProofError::InvalidConfig("merkle backend takes no group"))
            }
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        canonical_encode(self)
            .expect("params hold no floats")
            .into_vec()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, ProofError> {
        let params: ProofParams =
            canonical_decode(bytes).map_err(|e| ProofError::Malformed(e.to_string()))?;
        params.validate()?;
        Ok(params)
    }
}

impl Encode for ProofParams {
    fn encode(&self, enc: &mut Encoder) {
        enc.u8(self.backend.tag())
            .value(&self.group)
            .u64(self.challenge_count)
            .str(&self.seed);
    }
}

impl Decode for ProofParams {
    fn decode(dec: &mut Decoder<'_>) -> Result<Self, DecodeError> {
        let tag = dec.u8()?;
        let backend = Backend::from_tag(tag).ok_or(DecodeError::InvalidTag {
            what: "backend",
            tag,
        })?;
        Ok(ProofParams {
            backend,
            group: dec.value()?,
            challenge_count: dec.u64()?,
            seed: dec.string()?,
        })
    }
}

/// What is being proved: possession of a dataset whose Merkle root is
/// `committed_digest` and which has `leaf_count` blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProofStatement {
    pub committed_digest: Digest,
    pub leaf_count: u64,
}

impl ProofStatement {
    /// Statement for an on-ledger token: its data root and declared block count.
    pub fn for_token(state: &LedgerState, token_id: u64) -> Option<Self> {
        state.tokens.get(&token_id).map(|t| ProofStatement {
            committed_digest: t.data_root,
            leaf_count: t.metadata.block_count,
        })
    }
}

impl Encode for ProofStatement {
    fn encode(&self, enc: &mut Encoder) {
        enc.value(&self.committed_digest).u64(self.leaf_count);
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PossessionProof {
    Sigma(SigmaTranscript),
    MerkleChallenge(ChallengeTranscript),
}

impl PossessionProof {
    pub fn backend(&self) -> Backend {
        match self {
            PossessionProof::Sigma(_) => Backend::SigmaCommit,
            PossessionProof::MerkleChallenge(_) => Backend::MerkleChallenge,
        }
    }

    pub fn is_zero_knowledge(&self) -> bool {
        self.backend().is_zero_knowledge()
    }

    /// Dataset blocks disclosed to the verifier by this transcript.
    pub fn revealed_blocks(&self) -> Vec<&DataBlock> {
        match self {
            PossessionProof::Sigma(_) => Vec::new(),
            PossessionProof::MerkleChallenge(t) => t.openings.iter().map(|o| &o.block).collect(),
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let backend = self.backend();
        let mut enc = Encoder::new();
        enc.u8(backend.tag()).bool(backend.is_zero_knowledge());
        match self {
            PossessionProof::Sigma(t) => enc.value(t),
            PossessionProof::MerkleChallenge(t) => enc.value(t),
        };
        enc.finish().expect("transcripts hold no floats").into_vec()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, ProofError> {
        let malformed = |e: DecodeError| ProofError::Malformed(e.to_string());
        let mut dec = Decoder::new(bytes);
        let tag = dec.u8().map_err(malformed)?;
        let backend = Backend::from_tag(tag)
            .ok_or_else(|| ProofError::Malformed(format!("unknown backend tag {tag}")))?;
        let zk = dec.bool().map_err(malformed)?;
        if zk != backend.is_zero_knowledge() {
            return Err(ProofError::Malformed(
                "zero-knowledge flag does not match backend".into(),
            ));
        }
        let proof = match backend {
            Backend::SigmaCommit => PossessionProof::Sigma(dec.value().map_err(malformed)?),
            Backend::MerkleChallenge => {
                PossessionProof::MerkleChallenge(dec.value().map_err(malformed)?)
            }
        };
        dec.finish().map_err(malformed)?;
        Ok(proof)
    }

    /// Digest recorded on the ledger when the proof is anchored.
    pub fn digest(&self) -> Digest {
        hash(&self.to_bytes())
    }
}

pub fn setup(config: &SecurityConfig) -> Result<ProofParams, ProofError> {
    if config.challenge_count == 0 {
        return Err(ProofError::InvalidConfig(
            "challenge_count must be at least 1",
        ));
    }
    if config.seed.is_empty() {
        return Err(ProofError::InvalidConfig("seed label must not be empty"));
    }
    let group = match config.backend {
        Backend::SigmaCommit => Some(GroupParams::new(config.group, &config.seed)),
        Backend::MerkleChallenge => None,
    };
    Ok(ProofParams {
        backend: config.backend,
        group,
        challenge_count: config.challenge_count,
        seed: config.seed.clone(),
    })
}

/// Fails with [`ProofError::StatementMismatch`] unless `dataset` builds to
/// the statement's root and block count.
pub fn prove(
    dataset: &[DataBlock],
    statement: &ProofStatement,
    params: &ProofParams,
    randomness_seed: u64,
) -> Result<PossessionProof, ProofError> {
    let tree = MerkleTree::build(dataset).map_err(|_| ProofError::StatementMismatch)?;
    if tree.root() != statement.committed_digest || tree.leaf_count() != statement.leaf_count {
        return Err(ProofError::StatementMismatch);
    }
    match params.backend {
        Backend::SigmaCommit => {
            let group = params
                .group
                .as_ref()
                .ok_or(ProofError::InvalidConfig("sigma backend needs a group"))?;
            Ok(PossessionProof::Sigma(sigma::prove(
                params,
                group,
                statement,
                randomness_seed,
            )))
        }
        Backend::MerkleChallenge => Ok(PossessionProof::MerkleChallenge(challenge::prove(
            &tree, dataset, params, statement,
        ))),
    }
}

pub fn verify(proof: &PossessionProof, statement: &ProofStatement, params: &ProofParams) -> bool {
    match (proof, params.backend, &params.group) {
        (PossessionProof::Sigma(t), Backend::SigmaCommit, Some(group)) => {
            sigma::verify(params, group, statement, t)
        }
        (PossessionProof::MerkleChallenge(t), Backend::MerkleChallenge, _) => {
            params.challenge_count >= 1 && challenge::verify(params, statement, t)
        }
        _ => false,
    }
}

/// Owner, or a grantee with access at the transaction's logical time, may
/// anchor a proof digest against a token.
pub(crate) fn anchor_transition(
    state: &mut LedgerState,
    ctx: &TxContext,
    token_id: u64,
    proof_digest: Digest,
) -> Result<Effect, Revert> {
    let owner =
        registry::owner_of(state, token_id).map_err(|_| Revert::new(REVERT_UNKNOWN_TOKEN))?;
    if owner != ctx.sender
        && !registry::check_access(state, &ctx.sender, token_id, ctx.logical_time)
    {
        return Err(Revert::new(REVERT_NOT_AUTHORIZED_TO_ANCHOR));
    }
    Ok(Effect::ProofAnchored {
        token_id,
        proof_digest,
    })
}
