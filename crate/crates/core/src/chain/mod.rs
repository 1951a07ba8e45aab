//! Tamper-evident parent chain, violation side chain and PoS election.

mod block;
mod pos;
mod side;

pub use block::{
    block_hash, canonical_header_bytes, header_from_bytes, parent_block_size, transactions_root, Chain, ChainInvalid,
    InvalidReason, ParentBlock, ParentBlockHeader, BLOCK_VERSION, HEADER_LEN,
};
pub use pos::{election_rng, select_validator, ElectionError, Validator};
pub use side::{side_block_id, violations_root, SideBlock, SideChain, ViolationTx, ViolationType};
