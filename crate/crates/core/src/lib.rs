//! Deterministic single-writer ledger for UAV flight datasets managed as
//! NFTs: Merkle commitments, an owner-gated token registry with expiring
//! access grants, possession proofs, a differentially private exporter and
//! fleet task assignment.

pub mod crypto;
pub mod fleet;
pub mod ledger;
pub mod merkle;
pub mod privacy;
pub mod proof;
pub mod registry;
