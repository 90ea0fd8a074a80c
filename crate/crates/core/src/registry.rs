//! NFT contract semantics: minting over dataset commitments, owner-gated
//! transfer, and time-limited access grants with licensing conditions.
//!
//! State-changing operations run as ledger transactions; see
//! [`LedgerState::submit`](crate::ledger::LedgerState::submit). The query
//! functions here read a state snapshot directly.

use thiserror::Error;

use crate::crypto::{Decode, DecodeError, Decoder, Digest, Encode, Encoder};
use crate::ledger::{Effect, LedgerState, Principal, Revert, TxContext};

pub const REVERT_ONLY_OWNER_TRANSFER: &str = "Only the owner can transfer";
pub const REVERT_ONLY_OWNER_GRANT: &str = "Only the owner can grant access";
pub const REVERT_UNKNOWN_TOKEN: &str = "unknown token";
pub const REVERT_INVALID_METADATA: &str = "invalid metadata";
pub const REVERT_GRANT_EXPIRED: &str = "grant already expired";
pub const REVERT_NO_ACTIVE_GRANT: &str = "no active grant";
pub const REVERT_UAV_TOKEN: &str = "UAV tokens move only with their UAV";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RegistryError {
    #[error("unknown token {0}")]
    UnknownToken(u64),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NftMetadata {
    pub mission_id: String,
    pub uav_id: String,
    pub start_time: u64,
    pub end_time: u64,
    pub block_count: u64,
    pub declared_region: String,
}

impl NftMetadata {
    pub fn is_valid(&self) -> bool {
        self.start_time <= self.end_time && self.block_count >= 1
    }
}

impl Encode for NftMetadata {
    fn encode(&self, enc: &mut Encoder) {
        enc.str(&self.mission_id)
            .str(&self.uav_id)
            .u64(self.start_time)
            .u64(self.end_time)
            .u64(self.block_count)
            .str(&self.declared_region);
    }
}

impl Decode for NftMetadata {
    fn decode(dec: &mut Decoder<'_>) -> Result<Self, DecodeError> {
        Ok(NftMetadata {
            mission_id: dec.string()?,
            uav_id: dec.string()?,
            start_time: dec.u64()?,
            end_time: dec.u64()?,
            block_count: dec.u64()?,
            declared_region: dec.string()?,
        })
    }
}

/// Certificate binding a token id to a dataset's Merkle root.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NftToken {
    pub token_id: u64,
    pub data_root: Digest,
    pub metadata: NftMetadata,
}

impl Encode for NftToken {
    fn encode(&self, enc: &mut Encoder) {
        enc.u64(self.token_id)
            .value(&self.data_root)
            .value(&self.metadata);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum UsageClass {
    View,
    Derive,
    Redistribute,
}

impl UsageClass {
    pub fn as_str(self) -> &'static str {
        match self {
            UsageClass::View => "view",
            UsageClass::Derive => "derive",
            UsageClass::Redistribute => "redistribute",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "view" => Some(UsageClass::View),
            "derive" => Some(UsageClass::Derive),
            "redistribute" => Some(UsageClass::Redistribute),
            _ => None,
        }
    }
}

impl Encode for UsageClass {
    fn encode(&self, enc: &mut Encoder) {
        enc.u8(*self as u8);
    }
}

impl Decode for UsageClass {
    fn decode(dec: &mut Decoder<'_>) -> Result<Self, DecodeError> {
        match dec.u8()? {
            0 => Ok(UsageClass::View),
            1 => Ok(UsageClass::Derive),
            2 => Ok(UsageClass::Redistribute),
            tag => Err(DecodeError::InvalidTag {
                what: "usage class",
                tag,
            }),
        }
    }
}

/// Licensing predicate attached to a grant. Usage class is recorded for
/// the grantee's obligations but does not gate access.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LicenseConditions {
    pub fee_paid: bool,
    pub region_ok: bool,
    pub usage_class: UsageClass,
}

impl LicenseConditions {
    pub fn satisfied(&self) -> bool {
        self.fee_paid && self.region_ok
    }
}

impl Encode for LicenseConditions {
    fn encode(&self, enc: &mut Encoder) {
        enc.bool(self.fee_paid)
            .bool(self.region_ok)
            .value(&self.usage_class);
    }
}

impl Decode for LicenseConditions {
    fn decode(dec: &mut Decoder<'_>) -> Result<Self, DecodeError> {
        Ok(LicenseConditions {
            fee_paid: dec.bool()?,
            region_ok: dec.bool()?,
            usage_class: dec.value()?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AccessGrant {
    pub grantee: Principal,
    pub token_id: u64,
    pub expiration: u64,
    pub conditions: LicenseConditions,
    pub revoked: bool,
}

impl Encode for AccessGrant {
    fn encode(&self, enc: &mut Encoder) {
        enc.value(&self.grantee)
            .u64(self.token_id)
            .u64(self.expiration)
            .value(&self.conditions)
            .bool(self.revoked);
    }
}

pub fn owner_of(state: &LedgerState, token_id: u64) -> Result<Principal, RegistryError> {
    state
        .owners
        .get(&token_id)
        .copied()
        .ok_or(RegistryError::UnknownToken(token_id))
}

/// `t_now < expiration` and the licensing predicate holds, on an unrevoked
/// grant. Expiry needs no transaction; it follows from `t_now` alone.
pub fn check_access(state: &LedgerState, grantee: &Principal, token_id: u64, t_now: u64) -> bool {
    state
        .grants
        .get(&(*grantee, token_id))
        .is_some_and(|g| !g.revoked && t_now < g.expiration && g.conditions.satisfied())
}

pub(crate) fn mint(
    state: &mut LedgerState,
    ctx: &TxContext,
    data_root: Digest,
    metadata: &NftMetadata,
) -> Result<Effect, Revert> {
    if !metadata.is_valid() {
        return Err(Revert::new(REVERT_INVALID_METADATA));
    }
    let token_id = state.insert_token(ctx.sender, data_root, metadata.clone());
    Ok(Effect::Minted { token_id })
}

pub(crate) fn transfer_token(
    state: &mut LedgerState,
    ctx: &TxContext,
    from: Principal,
    to: Principal,
    token_id: u64,
) -> Result<Effect, Revert> {
    let owner = owner_of(state, token_id).map_err(|_| Revert::new(REVERT_UNKNOWN_TOKEN))?;
    if ctx.sender != owner || from != owner {
        return Err(Revert::new(REVERT_ONLY_OWNER_TRANSFER));
    }
    if state.uav_for_token(token_id).is_some() {
        return Err(Revert::new(REVERT_UAV_TOKEN));
    }
    state.owners.insert(token_id, to);
    Ok(Effect::Transferred { token_id, to })
}

pub(crate) fn grant_access(
    state: &mut LedgerState,
    ctx: &TxContext,
    grantee: Principal,
    token_id: u64,
    expiration: u64,
    conditions: LicenseConditions,
) -> Result<Effect, Revert> {
    let owner = owner_of(state, token_id).map_err(|_| Revert::new(REVERT_UNKNOWN_TOKEN))?;
    if ctx.sender != owner {
        return Err(Revert::new(REVERT_ONLY_OWNER_GRANT));
    }
    if expiration <= ctx.logical_time {
        return Err(Revert::new(REVERT_GRANT_EXPIRED));
    }
    state.grants.insert(
        (grantee, token_id),
        AccessGrant {
            grantee,
            token_id,
            expiration,
            conditions,
            revoked: false,
        },
    );
    Ok(Effect::Granted { token_id, grantee })
}

pub(crate) fn revoke_access(
    state: &mut LedgerState,
    ctx: &TxContext,
    grantee: Principal,
    token_id: u64,
) -> Result<Effect, Revert> {
    let owner = owner_of(state, token_id).map_err(|_| Revert::new(REVERT_UNKNOWN_TOKEN))?;
    if ctx.sender != owner {
        return Err(Revert::new(REVERT_ONLY_OWNER_GRANT));
    }
    match state.grants.get_mut(&(grantee, token_id)) {
        Some(grant) if !grant.revoked => {
            grant.revoked = true;
            Ok(Effect::Revoked { token_id, grantee })
        }
        _ => Err(Revert::new(REVERT_NO_ACTIVE_GRANT)),
    }
}
