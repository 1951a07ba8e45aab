use serde::{Deserialize, Serialize};

use crate::address::Address;
use crate::canonical::{from_canonical_str, to_canonical_string};
use crate::chunkstore::merkle_root;
use crate::hash::{double_sha256, Hash};
use crate::tx::Transaction;

pub const BLOCK_VERSION: u32 = 1;
pub const HEADER_LEN: usize = 88;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParentBlockHeader {
    pub version: u32,
    pub prev_hash: Hash,
    pub merkle_root: Hash,
    pub timestamp: u64,
    /// Carried for format compatibility; there is no work target under PoS.
    pub target_difficulty: u32,
    pub nonce: u64,
}

/// version(4) || prev_hash(32) || merkle_root(32) || timestamp(8) ||
/// target_difficulty(4) || nonce(8), integers big-endian.
pub fn canonical_header_bytes(header: &ParentBlockHeader) -> [u8; HEADER_LEN] {
    let mut out = [0u8; HEADER_LEN];
    out[0..4].copy_from_slice(&header.version.to_be_bytes());
    out[4..36].copy_from_slice(header.prev_hash.as_bytes());
    out[36..68].copy_from_slice(header.merkle_root.as_bytes());
    out[68..76].copy_from_slice(&header.timestamp.to_be_bytes());
    out[76..80].copy_from_slice(&header.target_difficulty.to_be_bytes());
    out[80..88].copy_from_slice(&header.nonce.to_be_bytes());
    out
}

/// Inverse of [`canonical_header_bytes`].
pub fn header_from_bytes(bytes: &[u8; HEADER_LEN]) -> ParentBlockHeader {
    let hash_at = |at: usize| {
        let mut h = [0u8; 32];
        h.copy_from_slice(&bytes[at..at + 32]);
        Hash(h)
    };
    ParentBlockHeader {
        version: u32::from_be_bytes(bytes[0..4].try_into().unwrap()),
        prev_hash: hash_at(4),
        merkle_root: hash_at(36),
        timestamp: u64::from_be_bytes(bytes[68..76].try_into().unwrap()),
        target_difficulty: u32::from_be_bytes(bytes[76..80].try_into().unwrap()),
        nonce: u64::from_be_bytes(bytes[80..88].try_into().unwrap()),
    }
}

/// SHA-256(SHA-256(header bytes)).
pub fn block_hash(header: &ParentBlockHeader) -> Hash {
    double_sha256(&canonical_header_bytes(header))
}

/// Merkle root over single-SHA-256 transaction leaves; all zeros when there
/// are no transactions.
pub fn transactions_root(transactions: &[Transaction]) -> Hash {
    if transactions.is_empty() {
        return Hash::ZERO;
    }
    let leaves: Vec<Hash> = transactions.iter().map(Transaction::leaf_hash).collect();
    merkle_root(&leaves).expect("leaves are nonempty")
}

/// Bytes following the size field in the block's binary layout: header,
/// tx count (8), validator (20), then each transaction as a 4-byte length
/// prefix plus its canonical encoding.
pub fn parent_block_size(transactions: &[Transaction]) -> u64 {
    let txs: usize = transactions.iter().map(|t| 4 + t.canonical_bytes().len()).sum();
    (HEADER_LEN + 8 + 20 + txs) as u64
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParentBlock {
    pub block_size: u64,
    /// The recorded header hash. Validation recomputes and compares it.
    pub hash: Hash,
    pub header: ParentBlockHeader,
    pub tx_count: u64,
    pub transactions: Vec<Transaction>,
    pub validator: Address,
}

impl ParentBlock {
    pub fn mint(prev_hash: Hash, transactions: Vec<Transaction>, validator: Address, now: u64) -> Self {
        let header = ParentBlockHeader {
            version: BLOCK_VERSION,
            prev_hash,
            merkle_root: transactions_root(&transactions),
            timestamp: now,
            target_difficulty: 0,
            nonce: 0,
        };
        ParentBlock {
            block_size: parent_block_size(&transactions),
            hash: block_hash(&header),
            header,
            tx_count: transactions.len() as u64,
            transactions,
            validator,
        }
    }

    pub fn to_canonical_json(&self) -> String {
        to_canonical_string(self)
    }

    /// Checks everything a block can prove about itself plus its link to
    /// `expected_prev`.
    pub fn check(&self, expected_prev: &Hash) -> Result<(), InvalidReason> {
        if self.tx_count != self.transactions.len() as u64 {
            return Err(InvalidReason::TxCountMismatch);
        }
        if self.header.merkle_root != transactions_root(&self.transactions) {
            return Err(InvalidReason::MerkleRootMismatch);
        }
        if self.block_size != parent_block_size(&self.transactions) {
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

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum InvalidReason {
    #[error("tx count mismatch")]
    TxCountMismatch,
    #[error("merkle root mismatch")]
    MerkleRootMismatch,
    #[error("block size mismatch")]
    BlockSizeMismatch,
    #[error("prev hash mismatch")]
    PrevHashMismatch,
    #[error("block hash mismatch")]
    BlockHashMismatch,
    #[error("side block id mismatch")]
    SideIdMismatch,
    #[error("bad node signature")]
    BadSignature,
    #[error("validator was not elected for this height")]
    WrongValidator,
    #[error("malformed block: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid at height {height}: {reason}")]
pub struct ChainInvalid {
    pub height: usize,
    pub reason: InvalidReason,
}

/// Ordered parent blocks; index is height.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Chain {
    blocks: Vec<ParentBlock>,
}

impl Chain {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_blocks(blocks: Vec<ParentBlock>) -> Self {
        Chain { blocks }
    }

    pub fn blocks(&self) -> &[ParentBlock] {
        &self.blocks
    }

    /// Direct mutable access, for tamper experiments.
    pub fn blocks_mut(&mut self) -> &mut Vec<ParentBlock> {
        &mut self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn get(&self, height: usize) -> Option<&ParentBlock> {
        self.blocks.get(height)
    }

    pub fn tip(&self) -> Option<&ParentBlock> {
        self.blocks.last()
    }

    /// Hash of the newest block, or all zeros for an empty chain.
    pub fn tip_hash(&self) -> Hash {
        self.tip().map(|b| b.hash).unwrap_or(Hash::ZERO)
    }

    /// Builds the next block on the tip, appends it and returns it.
    pub fn append_block(&mut self, transactions: Vec<Transaction>, validator: Address, now: u64) -> &ParentBlock {
        let block = ParentBlock::mint(self.tip_hash(), transactions, validator, now);
        self.blocks.push(block);
        self.blocks.last().unwrap()
    }

    /// Appends a block produced elsewhere after checking it against the tip.
    pub fn push_checked(&mut self, block: ParentBlock) -> Result<(), ChainInvalid> {
        block.check(&self.tip_hash()).map_err(|reason| ChainInvalid { height: self.blocks.len(), reason })?;
        self.blocks.push(block);
        Ok(())
    }

    /// Reports the lowest height whose block fails its own checks or its link
    /// to the previous block.
    pub fn validate_chain(&self) -> Result<(), ChainInvalid> {
        let mut prev = Hash::ZERO;
        for (height, block) in self.blocks.iter().enumerate() {
            block.check(&prev).map_err(|reason| ChainInvalid { height, reason })?;
            prev = block.hash;
        }
        Ok(())
    }

    /// One canonical JSON block per line.
    pub fn to_log(&self) -> String {
        let mut out = String::new();
        for b in &self.blocks {
            out.push_str(&b.to_canonical_json());
            out.push('\n');
        }
        out
    }

    /// Parses and validates a block log. Every line must be the canonical
    /// encoding of its block.
    pub fn from_log(text: &str) -> Result<Chain, ChainInvalid> {
        let mut chain = Chain::new();
        for (height, line) in text.lines().enumerate() {
            let block: ParentBlock = from_canonical_str(line)
                .map_err(|e| ChainInvalid { height, reason: InvalidReason::Malformed(e.to_string()) })?;
            chain.push_checked(block)?;
        }
        Ok(chain)
    }
}
