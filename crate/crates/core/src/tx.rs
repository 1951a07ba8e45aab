//! Canonical transaction records carried in parent blocks.

use serde::{Deserialize, Serialize};

use crate::address::Address;
use crate::canonical::to_canonical_bytes;
use crate::chunkstore::FileMeta;
use crate::fingerprint::Fingerprint;
use crate::hash::{sha256, Hash};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TxKind {
    Register,
    AddBlock,
    GrantAccess,
    RemoveAccess,
    PayAndDownload,
}

/// One state transition. Serialized as canonical JSON with optional fields
/// omitted when absent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Transaction {
    pub kind: TxKind,
    pub caller: Address,
    /// Manifest root for contract calls, credential hash for registrations.
    pub hash: Hash,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub addr: Option<Address>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cents: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fingerprint: Option<Fingerprint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<FileMeta>,
    pub timestamp: u64,
}

impl Transaction {
    fn bare(kind: TxKind, caller: Address, hash: Hash, timestamp: u64) -> Self {
        Transaction { kind, caller, hash, addr: None, cents: None, fingerprint: None, meta: None, timestamp }
    }

    pub fn register(address: Address, credential_hash: Hash, timestamp: u64) -> Self {
        Self::bare(TxKind::Register, address, credential_hash, timestamp)
    }

    pub fn add_block(
        caller: Address,
        root: Hash,
        fingerprint: Fingerprint,
        meta: FileMeta,
        price_cents: u64,
        timestamp: u64,
    ) -> Self {
        Transaction {
            cents: Some(price_cents),
            fingerprint: Some(fingerprint),
            meta: Some(meta),
            ..Self::bare(TxKind::AddBlock, caller, root, timestamp)
        }
    }

    pub fn grant_access(caller: Address, addr: Address, root: Hash, timestamp: u64) -> Self {
        Transaction { addr: Some(addr), ..Self::bare(TxKind::GrantAccess, caller, root, timestamp) }
    }

    pub fn remove_access(caller: Address, addr: Address, root: Hash, timestamp: u64) -> Self {
        Transaction { addr: Some(addr), ..Self::bare(TxKind::RemoveAccess, caller, root, timestamp) }
    }

    pub fn pay_and_download(caller: Address, root: Hash, cents: u64, timestamp: u64) -> Self {
        Transaction { cents: Some(cents), ..Self::bare(TxKind::PayAndDownload, caller, root, timestamp) }
    }

    pub fn canonical_bytes(&self) -> Vec<u8> {
        to_canonical_bytes(self)
    }

    /// Merkle leaf: single SHA-256 of the canonical encoding.
    pub fn leaf_hash(&self) -> Hash {
        sha256(&self.canonical_bytes())
    }
}
