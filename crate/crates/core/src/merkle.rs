//! Binary Merkle trees over dataset blocks.
//!
//! Leaves are `H(0x00 ‖ encode(block))` and internal nodes are
//! `H(0x01 ‖ left ‖ right)`. When a level has an odd number of nodes the
//! last one is paired with a copy of itself.
//!
//! Proof wire format (all integers big-endian):
//!
//! ```text
//! leaf_index: u64 ‖ leaf_count: u64 ‖ sibling_count: u16 ‖ (side: u8 ‖ digest: [u8; 32])*
//! ```
//!
//! `side` is `0x00` when the sibling sits to the left of the running node and
//! `0x01` when it sits to the right.

use thiserror::Error;

use crate::crypto::{
    canonical_encode, hash_parts, Decode, DecodeError, Decoder, Digest, Encode, Encoder,
};

const LEAF_PREFIX: u8 = 0x00;
const NODE_PREFIX: u8 = 0x01;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MerkleError {
    #[error("cannot build a tree from zero blocks")]
    Empty,
    #[error("block at position {position} has index {index}")]
    NonContiguous { position: usize, index: u64 },
    #[error("leaf index {index} out of range for {leaf_count} leaves")]
    IndexOutOfRange { index: u64, leaf_count: u64 },
    #[error("malformed proof bytes: {0}")]
    MalformedProof(&'static str),
}

/// One hashable chunk of a flight dataset.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DataBlock {
    pub index: u64,
    /// Microseconds since the epoch.
    pub timestamp: u64,
    pub payload: Vec<u8>,
}

impl Encode for DataBlock {
    fn encode(&self, enc: &mut Encoder) {
        enc.u64(self.index).u64(self.timestamp).bytes(&self.payload);
    }
}

impl Decode for DataBlock {
    fn decode(dec: &mut Decoder<'_>) -> Result<Self, DecodeError> {
        Ok(DataBlock {
            index: dec.u64()?,
            timestamp: dec.u64()?,
            payload: dec.bytes()?,
        })
    }
}

pub fn leaf_hash(block: &DataBlock) -> Digest {
    let bytes = canonical_encode(block).expect("DataBlock contains no floats");
    hash_parts(&[&[LEAF_PREFIX], &bytes])
}

pub fn node_hash(left: &Digest, right: &Digest) -> Digest {
    hash_parts(&[&[NODE_PREFIX], left.as_bytes(), right.as_bytes()])
}

/// Number of sibling steps from a leaf to the root, `ceil(log2(n))`.
pub fn proof_depth(leaf_count: u64) -> usize {
    let mut size = leaf_count;
    let mut depth = 0;
    while size > 1 {
        size = size.div_ceil(2);
        depth += 1;
    }
    depth
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MerkleTree {
    levels: Vec<Vec<Digest>>,
}

impl MerkleTree {
    pub fn build(blocks: &[DataBlock]) -> Result<Self, MerkleError> {
        if blocks.is_empty() {
            return Err(MerkleError::Empty);
        }
        for (position, block) in blocks.iter().enumerate() {
            if block.index != position as u64 {
                return Err(MerkleError::NonContiguous {
                    position,
                    index: block.index,
                });
            }
        }
        let mut levels = vec![blocks.iter().map(leaf_hash).collect::<Vec<_>>()];
        while levels.last().map_or(0, Vec::len) > 1 {
            let below = levels.last().expect("at least one level");
            let above = below
                .chunks(2)
                .map(|pair| match pair {
                    [l, r] => node_hash(l, r),
                    [single] => node_hash(single, single),
                    _ => unreachable!("chunks(2) yields one or two items"),
                })
                .collect();
            levels.push(above);
        }
        Ok(MerkleTree { levels })
    }

    pub fn root(&self) -> Digest {
        self.levels.last().expect("tree has a root level")[0]
    }

    pub fn leaf_count(&self) -> u64 {
        self.levels[0].len() as u64
    }

    pub fn leaf_digests(&self) -> &[Digest] {
        &self.levels[0]
    }

    /// Digest layers from the leaves up to the single-node root layer.
    pub fn levels(&self) -> &[Vec<Digest>] {
        &self.levels
    }

    pub fn inclusion_proof(&self, leaf_index: u64) -> Result<MerkleProof, MerkleError> {
        let leaf_count = self.leaf_count();
        if leaf_index >= leaf_count {
            return Err(MerkleError::IndexOutOfRange {
                index: leaf_index,
                leaf_count,
            });
        }
        let mut idx = leaf_index as usize;
        let mut siblings = Vec::with_capacity(self.levels.len() - 1);
        for level in &self.levels[..self.levels.len() - 1] {
            let (side, sibling) = if idx.is_multiple_of(2) {
                (Side::Right, level.get(idx + 1).unwrap_or(&level[idx]))
            } else {
                (Side::Left, &level[idx - 1])
            };
            siblings.push((*sibling, side));
            idx /= 2;
        }
        Ok(MerkleProof {
            leaf_index,
            leaf_count,
            siblings,
        })
    }
}

/// Builds the tree for `blocks`; see [`MerkleTree::build`].
pub fn build_tree(blocks: &[DataBlock]) -> Result<MerkleTree, MerkleError> {
    MerkleTree::build(blocks)
}

/// Which side of the running node a sibling sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    fn byte(self) -> u8 {
        match self {
            Side::Left => 0x00,
            Side::Right => 0x01,
        }
    }

    fn from_byte(b: u8) -> Option<Self> {
        match b {
            0x00 => Some(Side::Left),
            0x01 => Some(Side::Right),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MerkleProof {
    pub leaf_index: u64,
    pub leaf_count: u64,
    pub siblings: Vec<(Digest, Side)>,
}

impl MerkleProof {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(18 + self.siblings.len() * 33);
        out.extend_from_slice(&self.leaf_index.to_be_bytes());
        out.extend_from_slice(&self.leaf_count.to_be_bytes());
        out.extend_from_slice(&(self.siblings.len() as u16).to_be_bytes());
        for (digest, side) in &self.siblings {
            out.push(side.byte());
            out.extend_from_slice(digest.as_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, MerkleError> {
        if bytes.len() < 18 {
            return Err(MerkleError::MalformedProof("header too short"));
        }
        let leaf_index = u64::from_be_bytes(bytes[0..8].try_into().expect("8 bytes"));
        let leaf_count = u64::from_be_bytes(bytes[8..16].try_into().expect("8 bytes"));
        let count = u16::from_be_bytes([bytes[16], bytes[17]]) as usize;
        let body = &bytes[18..];
        if body.len() != count * 33 {
            return Err(MerkleError::MalformedProof(
                "sibling section length mismatch",
            ));
        }
        let siblings = body
            .chunks_exact(33)
            .map(|chunk| {
                let side = Side::from_byte(chunk[0])
                    .ok_or(MerkleError::MalformedProof("bad side byte"))?;
                let digest = Digest(chunk[1..].try_into().expect("32 bytes"));
                Ok((digest, side))
            })
            .collect::<Result<_, _>>()?;
        Ok(MerkleProof {
            leaf_index,
            leaf_count,
            siblings,
        })
    }
}

/// Embedded in other canonical structures as a length-prefixed wire proof.
impl Encode for MerkleProof {
    fn encode(&self, enc: &mut Encoder) {
        enc.bytes(&self.to_bytes());
    }
}

impl Decode for MerkleProof {
    fn decode(dec: &mut Decoder<'_>) -> Result<Self, DecodeError> {
        let bytes = dec.bytes()?;
        MerkleProof::from_bytes(&bytes).map_err(|_| DecodeError::NonCanonical("merkle proof"))
    }
}

/// Folds the leaf hash of `block` up the sibling path and compares with
/// `root`. Costs exactly `siblings.len() + 1` hash invocations.
///
/// The path shape is checked against `leaf_index`/`leaf_count`: side flags
/// must match the index bits, and a sibling equals the running node exactly
/// at the positions where the odd-node duplication rule applies.
pub fn verify_inclusion(root: &Digest, block: &DataBlock, proof: &MerkleProof) -> bool {
    if proof.leaf_count == 0
        || proof.leaf_index >= proof.leaf_count
        || block.index != proof.leaf_index
        || proof.siblings.len() != proof_depth(proof.leaf_count)
    {
        return false;
    }
    let mut node = leaf_hash(block);
    let mut idx = proof.leaf_index;
    let mut size = proof.leaf_count;
    for (sibling, side) in &proof.siblings {
        let duplicated = idx.is_multiple_of(2) && idx + 1 == size;
        let expected_side = if idx.is_multiple_of(2) {
            Side::Right
        } else {
            Side::Left
        };
        if *side != expected_side || (*sibling == node) != duplicated {
            return false;
        }
        node = match side {
            Side::Right => node_hash(&node, sibling),
            Side::Left => node_hash(sibling, &node),
        };
        idx /= 2;
        size = size.div_ceil(2);
    }
    node == *root
}
