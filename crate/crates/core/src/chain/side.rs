//! Side blocks recording copyright and access violations.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::block::{block_hash, ChainInvalid, InvalidReason, ParentBlockHeader, BLOCK_VERSION, HEADER_LEN};
use crate::address::Address;
use crate::canonical::{from_canonical_str, to_canonical_bytes, to_canonical_string};
use crate::chunkstore::merkle_root;
use crate::hash::{sha256, sha256_parts, Hash};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ViolationType {
    DuplicateUpload = 1,
    UnauthorizedDownload = 2,
}

impl ViolationType {
    pub fn code(self) -> u8 {
        self as u8
    }
}

impl Serialize for ViolationType {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_u8(self.code())
    }
}

impl<'de> Deserialize<'de> for ViolationType {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        match u8::deserialize(deserializer)? {
            1 => Ok(ViolationType::DuplicateUpload),
            2 => Ok(ViolationType::UnauthorizedDownload),
            other => Err(serde::de::Error::custom(format!("unknown violation type {other}"))),
        }
    }
}

/// The fields covered by the node signature.
#[derive(Serialize)]
struct UnsignedViolation {
    tov: u64,
    uid: Address,
    vt: ViolationType,
    nid: Address,
}

/// A violation record. `ns` is a keyed SHA-256 tag, not a public-key
/// signature: anyone holding the node secret can produce it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ViolationTx {
    /// Time of the violation, UTC seconds.
    pub tov: u64,
    /// Offending user.
    pub uid: Address,
    pub vt: ViolationType,
    /// Reporting node.
    pub nid: Address,
    pub ns: Hash,
}

impl ViolationTx {
    pub fn signed(tov: u64, uid: Address, vt: ViolationType, nid: Address, node_secret: &[u8; 32]) -> Self {
        let mut v = ViolationTx { tov, uid, vt, nid, ns: Hash::ZERO };
        v.ns = v.expected_signature(node_secret);
        v
    }

    /// Canonical encoding of the record without `ns`.
    pub fn unsigned_bytes(&self) -> Vec<u8> {
        to_canonical_bytes(&UnsignedViolation { tov: self.tov, uid: self.uid, vt: self.vt, nid: self.nid })
    }

    /// SHA-256(nid || unsigned bytes || node secret).
    pub fn expected_signature(&self, node_secret: &[u8; 32]) -> Hash {
        sha256_parts(&[self.nid.as_bytes(), &self.unsigned_bytes(), node_secret])
    }

    pub fn verify(&self, node_secret: &[u8; 32]) -> bool {
        self.ns == self.expected_signature(node_secret)
    }

    pub fn leaf_hash(&self) -> Hash {
        sha256(&to_canonical_bytes(self))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SideBlock {
    /// `<first 8 hex chars of parent hash>-<index among that parent's side blocks>`.
    pub id: String,
    pub parent_hash: Hash,
    pub block_size: u64,
    pub hash: Hash,
    /// Same six fields as a parent header; `prev_hash` links side blocks.
    pub header: ParentBlockHeader,
    pub tx_counter: u64,
    pub violations: Vec<ViolationTx>,
    /// Arrival time on the network, UTC seconds.
    pub chain_time: u64,
}

pub fn violations_root(violations: &[ViolationTx]) -> Hash {
    if violations.is_empty() {
        return Hash::ZERO;
    }
    let leaves: Vec<Hash> = violations.iter().map(ViolationTx::leaf_hash).collect();
    merkle_root(&leaves).expect("leaves are nonempty")
}

/// Header, tx counter (8), chain time (8), parent hash (32), id bytes, then
/// length-prefixed canonical violation records.
pub fn side_block_size(id: &str, violations: &[ViolationTx]) -> u64 {
    let txs: usize = violations.iter().map(|v| 4 + to_canonical_bytes(v).len()).sum();
    (HEADER_LEN + 8 + 8 + 32 + id.len() + txs) as u64
}

pub fn side_block_id(parent_hash: &Hash, index: usize) -> String {
    format!("{}-{index}", &parent_hash.to_hex()[..8])
}

impl SideBlock {
    pub fn to_canonical_json(&self) -> String {
        to_canonical_string(self)
    }

    fn check(&self, expected_prev: &Hash, expected_index: usize) -> Result<(), InvalidReason> {
        if self.tx_counter != self.violations.len() as u64 {
            return Err(InvalidReason::TxCountMismatch);
        }
        if self.header.merkle_root != violations_root(&self.violations) {
            return Err(InvalidReason::MerkleRootMismatch);
        }
        if self.id != side_block_id(&self.parent_hash, expected_index) {
            return Err(InvalidReason::SideIdMismatch);
        }
        if self.block_size != side_block_size(&self.id, &self.violations) {
            return Err(InvalidReason::BlockSizeMismatch);
        }
        if self.header.prev_hash != *expected_prev {
            return Err(InvalidReason::PrevHashMismatch);
        }
        if self.hash != block_hash(&self.header) {
            return Err(InvalidReason::BlockHashMismatch);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SideChain {
    blocks: Vec<SideBlock>,
}

impl SideChain {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn blocks(&self) -> &[SideBlock] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn tip_hash(&self) -> Hash {
        self.blocks.last().map(|b| b.hash).unwrap_or(Hash::ZERO)
    }

    pub fn violations(&self) -> impl Iterator<Item = &ViolationTx> {
        self.blocks.iter().flat_map(|b| &b.violations)
    }

    fn index_for_parent(&self, parent_hash: &Hash) -> usize {
        self.blocks.iter().filter(|b| b.parent_hash == *parent_hash).count()
    }

    /// Builds the side block that would record `violation` next.
    pub fn build(&self, violation: ViolationTx, parent_hash: Hash, now: u64) -> SideBlock {
        let violations = vec![violation];
        let id = side_block_id(&parent_hash, self.index_for_parent(&parent_hash));
        let header = ParentBlockHeader {
            version: BLOCK_VERSION,
            prev_hash: self.tip_hash(),
            merkle_root: violations_root(&violations),
            timestamp: now,
            target_difficulty: 0,
            nonce: 0,
        };
        SideBlock {
            block_size: side_block_size(&id, &violations),
            id,
            parent_hash,
            hash: block_hash(&header),
            header,
            tx_counter: 1,
            violations,
            chain_time: now,
        }
    }

    /// Appends a side block holding `violation`, attached to `parent_hash`.
    pub fn record_violation(&mut self, violation: ViolationTx, parent_hash: Hash, now: u64) -> &SideBlock {
        let block = self.build(violation, parent_hash, now);
        self.blocks.push(block);
        self.blocks.last().unwrap()
    }

    pub fn push_checked(&mut self, block: SideBlock) -> Result<(), ChainInvalid> {
        let index = self.index_for_parent(&block.parent_hash);
        block.check(&self.tip_hash(), index).map_err(|reason| ChainInvalid { height: self.blocks.len(), reason })?;
        self.blocks.push(block);
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ChainInvalid> {
        let mut replay = SideChain::new();
        for block in &self.blocks {
            replay.push_checked(block.clone())?;
        }
        Ok(())
    }

    pub fn to_log(&self) -> String {
        let mut out = String::new();
        for b in &self.blocks {
            out.push_str(&b.to_canonical_json());
            out.push('\n');
        }
        out
    }

    pub fn from_log(text: &str) -> Result<SideChain, ChainInvalid> {
        let mut chain = SideChain::new();
        for (height, line) in text.lines().enumerate() {
            let block: SideBlock = from_canonical_str(line)
                .map_err(|e| ChainInvalid { height, reason: InvalidReason::Malformed(e.to_string()) })?;
            chain.push_checked(block)?;
        }
        Ok(chain)
    }
}
