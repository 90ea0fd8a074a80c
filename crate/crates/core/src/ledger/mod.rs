//! Append-only transaction log and the deterministic state it replays to.
//!
//! There is one writer. Every transaction either applies in full, is appended
//! to the log and advances the head digest, or leaves the state untouched and
//! reports why in its [`Receipt`].

pub mod logfile;

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::crypto::{
    canonical_encode, hash, hash_parts, hash_value, Decode, DecodeError, Decoder, Digest, Encode,
    Encoder,
};
use crate::fleet::{self, AssignmentResult, Task, TaskRecord, UavAsset, UavRegistration};
use crate::proof;
use crate::registry::{self, AccessGrant, LicenseConditions, NftMetadata, NftToken};

/// 20-byte account address.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Principal(pub [u8; 20]);

impl Principal {
    /// First 20 bytes of `H(encode(seed) ‖ encode(label))`.
    pub fn derive(seed: &[u8], label: &str) -> Self {
        let mut enc = Encoder::new();
        enc.bytes(seed).str(label);
        let bytes = enc.finish().expect("no floats");
        let digest = hash(&bytes);
        let mut addr = [0u8; 20];
        addr.copy_from_slice(&digest.0[..20]);
        Principal(addr)
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn from_hex(s: &str) -> Option<Self> {
        let bytes = crate::crypto::decode_lower_hex(s)?;
        Some(Principal(bytes.try_into().ok()?))
    }
}

impl fmt::Display for Principal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "0x{}", self.to_hex())
    }
}

impl fmt::Debug for Principal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Principal(0x{})", self.to_hex())
    }
}

impl Encode for Principal {
    fn encode(&self, enc: &mut Encoder) {
        enc.raw(&self.0);
    }
}

impl Decode for Principal {
    fn decode(dec: &mut Decoder<'_>) -> Result<Self, DecodeError> {
        Ok(Principal(dec.array()?))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Action {
    MintToken {
        data_root: Digest,
        metadata: NftMetadata,
    },
    TransferToken {
        from: Principal,
        to: Principal,
        token_id: u64,
    },
    GrantAccess {
        grantee: Principal,
        token_id: u64,
        expiration: u64,
        conditions: LicenseConditions,
    },
    RevokeAccess {
        grantee: Principal,
        token_id: u64,
    },
    RegisterUav(UavRegistration),
    AssignTask(Task),
    TransferUav {
        uav_id: u64,
        new_owner: Principal,
    },
    CompleteTask {
        task_id: u64,
    },
    AnchorProof {
        token_id: u64,
        proof_digest: Digest,
    },
}

impl Action {
    pub fn name(&self) -> &'static str {
        match self {
            Action::MintToken { .. } => "MintToken",
            Action::TransferToken { .. } => "TransferToken",
            Action::GrantAccess { .. } => "GrantAccess",
            Action::RevokeAccess { .. } => "RevokeAccess",
            Action::RegisterUav(_) => "RegisterUav",
            Action::AssignTask(_) => "AssignTask",
            Action::TransferUav { .. } => "TransferUav",
            Action::CompleteTask { .. } => "CompleteTask",
            Action::AnchorProof { .. } => "AnchorProof",
        }
    }
}

impl Encode for Action {
    fn encode(&self, enc: &mut Encoder) {
        match self {
            Action::MintToken {
                data_root,
                metadata,
            } => {
                enc.u8(0).value(data_root).value(metadata);
            }
            Action::TransferToken { from, to, token_id } => {
                enc.u8(1).value(from).value(to).u64(*token_id);
            }
            Action::GrantAccess {
                grantee,
                token_id,
                expiration,
                conditions,
            } => {
                enc.u8(2)
                    .value(grantee)
                    .u64(*token_id)
                    .u64(*expiration)
                    .value(conditions);
            }
            Action::RevokeAccess { grantee, token_id } => {
                enc.u8(3).value(grantee).u64(*token_id);
            }
            Action::RegisterUav(reg) => {
                enc.u8(4).value(reg);
            }
            Action::AssignTask(task) => {
                enc.u8(5).value(task);
            }
            Action::TransferUav { uav_id, new_owner } => {
                enc.u8(6).u64(*uav_id).value(new_owner);
            }
            Action::CompleteTask { task_id } => {
                enc.u8(7).u64(*task_id);
            }
            Action::AnchorProof {
                token_id,
                proof_digest,
            } => {
                enc.u8(8).u64(*token_id).value(proof_digest);
            }
        }
    }
}

impl Decode for Action {
    fn decode(dec: &mut Decoder<'_>) -> Result<Self, DecodeError> {
        Ok(match dec.u8()? {
            0 => Action::MintToken {
                data_root: dec.value()?,
                metadata: dec.value()?,
            },
            1 => Action::TransferToken {
                from: dec.value()?,
                to: dec.value()?,
                token_id: dec.u64()?,
            },
            2 => Action::GrantAccess {
                grantee: dec.value()?,
                token_id: dec.u64()?,
                expiration: dec.u64()?,
                conditions: dec.value()?,
            },
            3 => Action::RevokeAccess {
                grantee: dec.value()?,
                token_id: dec.u64()?,
            },
            4 => Action::RegisterUav(dec.value()?),
            5 => Action::AssignTask(dec.value()?),
            6 => Action::TransferUav {
                uav_id: dec.u64()?,
                new_owner: dec.value()?,
            },
            7 => Action::CompleteTask {
                task_id: dec.u64()?,
            },
            8 => Action::AnchorProof {
                token_id: dec.u64()?,
                proof_digest: dec.value()?,
            },
            tag => {
                return Err(DecodeError::InvalidTag {
                    what: "action",
                    tag,
                })
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LedgerTransaction {
    pub seq: u64,
    pub sender: Principal,
    pub logical_time: u64,
    pub action: Action,
}

impl Encode for LedgerTransaction {
    fn encode(&self, enc: &mut Encoder) {
        enc.u64(self.seq)
            .value(&self.sender)
            .u64(self.logical_time)
            .value(&self.action);
    }
}

impl Decode for LedgerTransaction {
    fn decode(dec: &mut Decoder<'_>) -> Result<Self, DecodeError> {
        Ok(LedgerTransaction {
            seq: dec.u64()?,
            sender: dec.value()?,
            logical_time: dec.u64()?,
            action: dec.value()?,
        })
    }
}

/// Execution context handed to every transition.
#[derive(Debug, Clone, Copy)]
pub struct TxContext {
    pub seq: u64,
    pub sender: Principal,
    pub logical_time: u64,
}

/// A rejected transition and its reason.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Revert(pub String);

impl Revert {
    pub fn new(reason: impl Into<String>) -> Self {
        Revert(reason.into())
    }
}

impl fmt::Display for Revert {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Effect {
    Minted {
        token_id: u64,
    },
    Transferred {
        token_id: u64,
        to: Principal,
    },
    Granted {
        token_id: u64,
        grantee: Principal,
    },
    Revoked {
        token_id: u64,
        grantee: Principal,
    },
    UavRegistered {
        uav_id: u64,
        token_id: u64,
    },
    Assignment(AssignmentResult),
    TaskCompleted {
        task_id: u64,
        uav_id: u64,
    },
    UavTransferred {
        uav_id: u64,
        token_id: u64,
        new_owner: Principal,
    },
    ProofAnchored {
        token_id: u64,
        proof_digest: Digest,
    },
}

impl Effect {
    /// `false` only for an assignment that found no feasible UAV.
    fn changes_state(&self) -> bool {
        !matches!(
            self,
            Effect::Assignment(AssignmentResult { selected: None, .. })
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    /// Transition applied and the transaction was appended.
    Applied(Effect),
    /// Valid request that changed nothing; not appended.
    Unchanged(Effect),
    /// Transition rejected; not appended.
    Reverted(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Receipt {
    pub seq: u64,
    pub outcome: Outcome,
}

impl Receipt {
    pub fn is_applied(&self) -> bool {
        matches!(self.outcome, Outcome::Applied(_))
    }

    pub fn revert_reason(&self) -> Option<&str> {
        match &self.outcome {
            Outcome::Reverted(r) => Some(r),
            _ => None,
        }
    }

    pub fn effect(&self) -> Option<&Effect> {
        match &self.outcome {
            Outcome::Applied(e) | Outcome::Unchanged(e) => Some(e),
            Outcome::Reverted(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LedgerError {
    #[error("sequence gap: expected seq {expected}, got {got}")]
    SequenceGap { expected: u64, got: u64 },
    #[error("logical time went backwards at seq {seq}: {time} < {last}")]
    TimeRegression { seq: u64, time: u64, last: u64 },
    #[error("unknown token {0}")]
    UnknownToken(u64),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReplayError {
    #[error("malformed log at seq {seq}: {reason}")]
    Malformed { seq: u64, reason: String },
    #[error("transaction seq {seq} reverted during replay: {reason}")]
    Reverted { seq: u64, reason: String },
}

impl ReplayError {
    pub fn seq(&self) -> u64 {
        match self {
            ReplayError::Malformed { seq, .. } | ReplayError::Reverted { seq, .. } => *seq,
        }
    }
}

/// `H(encode("genesis"))`.
pub fn genesis_digest() -> Digest {
    hash_value("genesis").expect("string encodes")
}

/// `H(prev ‖ encode(tx))`.
pub fn chain_digest(prev: &Digest, tx_bytes: &[u8]) -> Digest {
    hash_parts(&[prev.as_bytes(), tx_bytes])
}

#[derive(Debug, Clone, PartialEq)]
pub struct LedgerState {
    pub tokens: BTreeMap<u64, NftToken>,
    pub owners: BTreeMap<u64, Principal>,
    pub grants: BTreeMap<(Principal, u64), AccessGrant>,
    pub uavs: BTreeMap<u64, UavAsset>,
    pub tasks: BTreeMap<u64, TaskRecord>,
    pub head_digest: Digest,
    log: Vec<LedgerTransaction>,
    token_refs: BTreeMap<u64, Vec<usize>>,
    uav_tokens: BTreeMap<u64, u64>,
    last_time: u64,
}

impl Default for LedgerState {
    fn default() -> Self {
        Self::genesis()
    }
}

impl LedgerState {
    pub fn genesis() -> Self {
        LedgerState {
            tokens: BTreeMap::new(),
            owners: BTreeMap::new(),
            grants: BTreeMap::new(),
            uavs: BTreeMap::new(),
            tasks: BTreeMap::new(),
            head_digest: genesis_digest(),
            log: Vec::new(),
            token_refs: BTreeMap::new(),
            uav_tokens: BTreeMap::new(),
            last_time: 0,
        }
    }

    pub fn log(&self) -> &[LedgerTransaction] {
        &self.log
    }

    pub fn next_seq(&self) -> u64 {
        self.log.len() as u64 + 1
    }

    pub fn last_time(&self) -> u64 {
        self.last_time
    }

    /// Builds a transaction with the next sequence number.
    pub fn transaction(
        &self,
        sender: Principal,
        logical_time: u64,
        action: Action,
    ) -> LedgerTransaction {
        LedgerTransaction {
            seq: self.next_seq(),
            sender,
            logical_time,
            action,
        }
    }

    /// Builds and submits a transaction with the next sequence number.
    pub fn execute(
        &mut self,
        sender: Principal,
        logical_time: u64,
        action: Action,
    ) -> Result<Receipt, LedgerError> {
        let tx = self.transaction(sender, logical_time, action);
        self.submit(tx)
    }

    pub fn submit(&mut self, tx: LedgerTransaction) -> Result<Receipt, LedgerError> {
        let expected = self.next_seq();
        if tx.seq != expected {
            return Err(LedgerError::SequenceGap {
                expected,
                got: tx.seq,
            });
        }
        if tx.logical_time < self.last_time {
            return Err(LedgerError::TimeRegression {
                seq: tx.seq,
                time: tx.logical_time,
                last: self.last_time,
            });
        }
        let seq = tx.seq;
        let bytes = match canonical_encode(&tx) {
            Ok(b) => b,
            Err(e) => {
                return Ok(Receipt {
                    seq,
                    outcome: Outcome::Reverted(e.to_string()),
                })
            }
        };
        let ctx = TxContext {
            seq,
            sender: tx.sender,
            logical_time: tx.logical_time,
        };
        let outcome = match self.apply(&ctx, &tx.action) {
            Err(revert) => Outcome::Reverted(revert.0),
            Ok(effect) if !effect.changes_state() => Outcome::Unchanged(effect),
            Ok(effect) => {
                let position = self.log.len();
                for token_id in self.tokens_touched(&tx.action, &effect) {
                    self.token_refs.entry(token_id).or_default().push(position);
                }
                self.head_digest = chain_digest(&self.head_digest, &bytes);
                self.last_time = tx.logical_time;
                self.log.push(tx);
                Outcome::Applied(effect)
            }
        };
        Ok(Receipt { seq, outcome })
    }

    /// Transitions validate before mutating so a revert leaves no trace.
    fn apply(&mut self, ctx: &TxContext, action: &Action) -> Result<Effect, Revert> {
        match action {
            Action::MintToken {
                data_root,
                metadata,
            } => registry::mint(self, ctx, *data_root, metadata),
            Action::TransferToken { from, to, token_id } => {
                registry::transfer_token(self, ctx, *from, *to, *token_id)
            }
            Action::GrantAccess {
                grantee,
                token_id,
                expiration,
                conditions,
            } => registry::grant_access(self, ctx, *grantee, *token_id, *expiration, *conditions),
            Action::RevokeAccess { grantee, token_id } => {
                registry::revoke_access(self, ctx, *grantee, *token_id)
            }
            Action::RegisterUav(reg) => fleet::register_uav(self, ctx, reg),
            Action::AssignTask(task) => fleet::assign_task(self, task),
            Action::TransferUav { uav_id, new_owner } => {
                fleet::transfer_uav(self, ctx, *uav_id, *new_owner)
            }
            Action::CompleteTask { task_id } => fleet::complete_task(self, ctx, *task_id),
            Action::AnchorProof {
                token_id,
                proof_digest,
            } => proof::anchor_transition(self, ctx, *token_id, *proof_digest),
        }
    }

    fn tokens_touched(&self, action: &Action, effect: &Effect) -> Vec<u64> {
        let uav_token = |uav_id: &u64| self.uavs.get(uav_id).map(|u| u.token_id);
        match (action, effect) {
            (_, Effect::Minted { token_id }) => vec![*token_id],
            (_, Effect::UavRegistered { token_id, .. }) => vec![*token_id],
            (_, Effect::UavTransferred { token_id, .. }) => vec![*token_id],
            (_, Effect::Assignment(r)) => r.selected.iter().filter_map(uav_token).collect(),
            (_, Effect::TaskCompleted { uav_id, .. }) => uav_token(uav_id).into_iter().collect(),
            (Action::TransferToken { token_id, .. }, _)
            | (Action::GrantAccess { token_id, .. }, _)
            | (Action::RevokeAccess { token_id, .. }, _)
            | (Action::AnchorProof { token_id, .. }, _) => vec![*token_id],
            _ => Vec::new(),
        }
    }

    /// Every logged transaction that touched `token_id`, in sequence order.
    pub fn history(&self, token_id: u64) -> Result<Vec<&LedgerTransaction>, LedgerError> {
        if !self.tokens.contains_key(&token_id) {
            return Err(LedgerError::UnknownToken(token_id));
        }
        Ok(self
            .token_refs
            .get(&token_id)
            .map(|positions| positions.iter().map(|&p| &self.log[p]).collect())
            .unwrap_or_default())
    }

    pub fn uav_for_token(&self, token_id: u64) -> Option<u64> {
        self.uav_tokens.get(&token_id).copied()
    }

    pub(crate) fn insert_token(
        &mut self,
        owner: Principal,
        data_root: Digest,
        metadata: NftMetadata,
    ) -> u64 {
        let token_id = self.tokens.len() as u64 + 1;
        self.tokens.insert(
            token_id,
            NftToken {
                token_id,
                data_root,
                metadata,
            },
        );
        self.owners.insert(token_id, owner);
        token_id
    }

    pub(crate) fn next_uav_id(&self) -> u64 {
        self.uavs.len() as u64 + 1
    }

    pub(crate) fn insert_uav(&mut self, uav: UavAsset) {
        self.uav_tokens.insert(uav.token_id, uav.uav_id);
        self.uavs.insert(uav.uav_id, uav);
    }

    /// Recomputes the head digest from genesis over the stored log.
    pub fn recompute_head(&self) -> Digest {
        self.log.iter().fold(genesis_digest(), |head, tx| {
            chain_digest(
                &head,
                &canonical_encode(tx).expect("logged transactions encode"),
            )
        })
    }

    /// Canonical encoding of the whole state, log included.
    pub fn state_bytes(&self) -> Vec<u8> {
        canonical_encode(self)
            .expect("state holds only validated, finite values")
            .into_vec()
    }
}

impl Encode for LedgerState {
    fn encode(&self, enc: &mut Encoder) {
        enc.value(&self.head_digest).u64(self.last_time);
        enc.len(self.tokens.len());
        for token in self.tokens.values() {
            enc.value(token).value(&self.owners[&token.token_id]);
        }
        enc.seq(self.grants.values());
        enc.seq(self.uavs.values());
        enc.seq(self.tasks.values());
        enc.seq(&self.log);
    }
}

/// Replays a log from genesis. The first transaction that is out of
/// sequence, goes back in time or reverts aborts the replay.
pub fn replay(log: &[LedgerTransaction]) -> Result<LedgerState, ReplayError> {
    let mut state = LedgerState::genesis();
    for tx in log {
        let seq = tx.seq;
        let receipt = state
            .submit(tx.clone())
            .map_err(|e| ReplayError::Malformed {
                seq,
                reason: e.to_string(),
            })?;
        match receipt.outcome {
            Outcome::Applied(_) => {}
            Outcome::Reverted(reason) => return Err(ReplayError::Reverted { seq, reason }),
            Outcome::Unchanged(_) => {
                return Err(ReplayError::Reverted {
                    seq,
                    reason: "transaction had no effect".to_string(),
                })
            }
        }
    }
    Ok(state)
}
