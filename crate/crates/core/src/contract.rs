//! File registration, owner-gated access control and pay-per-download
//! royalty accounting.
//!
//! Every mutating call checks all of its preconditions before touching state,
//! so a reverted call leaves [`ContractState`] exactly as it was.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::address::Address;
use crate::chunkstore::FileMeta;
use crate::fingerprint::Fingerprint;
use crate::hash::{sha256_parts, Hash};

/// Default download price: $1.37.
pub const DEFAULT_PRICE_CENTS: u64 = 137;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TxContext {
    /// The transaction sender.
    pub caller: Address,
    pub now: u64,
}

impl TxContext {
    pub fn new(caller: Address, now: u64) -> Self {
        Self { caller, now }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Revert {
    #[error("empty hash")]
    EmptyHash,
    #[error("empty address")]
    EmptyAddress,
    #[error("empty caller")]
    EmptyCaller,
    #[error("exists")]
    Exists,
    #[error("duplicate fingerprint")]
    DuplicateFingerprint,
    #[error("not owner")]
    NotOwner,
    #[error("unknown hash")]
    UnknownHash,
    #[error("malformed transaction: {0}")]
    Malformed(&'static str),
    #[error("payment of {paid} cents does not match price {price}")]
    PriceMismatch { paid: u64, price: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileData {
    pub owner: Address,
    pub access: BTreeMap<Address, bool>,
    #[serde(rename = "allowedAddresses")]
    pub allowed_addresses: Vec<Address>,
    pub downloads: u64,
    pub price_cents: u64,
    pub fingerprint: Fingerprint,
    pub manifest_root: Hash,
    pub author: String,
    pub title: String,
    pub uploaded_at: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DownloadGrant {
    pub hash: Hash,
    pub granted_to: Address,
    pub receipt_id: Hash,
    /// Download count after this payment.
    pub downloads: u64,
    pub price_cents: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RevenueRow {
    pub root: Hash,
    pub author: String,
    pub title: String,
    pub uploaded_at: u64,
    pub downloads: u64,
    pub revenue_cents: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContractState {
    #[serde(rename = "fileMapping")]
    pub file_mapping: BTreeMap<Hash, FileData>,
}

impl ContractState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.file_mapping.len()
    }

    pub fn is_empty(&self) -> bool {
        self.file_mapping.is_empty()
    }

    pub fn get(&self, hash: &Hash) -> Option<&FileData> {
        self.file_mapping.get(hash)
    }

    /// All registered fingerprints, in key order.
    pub fn fingerprints(&self) -> impl Iterator<Item = (&Hash, &Fingerprint)> {
        self.file_mapping.iter().map(|(h, f)| (h, &f.fingerprint))
    }

    /// Registers a file with the caller as owner.
    pub fn add_block(
        &mut self,
        ctx: &TxContext,
        hash: Hash,
        fingerprint: &Fingerprint,
        meta: &FileMeta,
        price_cents: u64,
    ) -> Result<(), Revert> {
        if ctx.caller.is_zero() {
            return Err(Revert::EmptyCaller);
        }
        if hash.is_zero() {
            return Err(Revert::EmptyHash);
        }
        if self.file_mapping.contains_key(&hash) {
            return Err(Revert::Exists);
        }
        if self.fingerprints().any(|(_, fp)| fp == fingerprint) {
            return Err(Revert::DuplicateFingerprint);
        }
        self.file_mapping.insert(
            hash,
            FileData {
                owner: ctx.caller,
                access: BTreeMap::new(),
                allowed_addresses: Vec::new(),
                downloads: 0,
                price_cents,
                fingerprint: fingerprint.clone(),
                manifest_root: hash,
                author: meta.author.clone(),
                title: meta.title.clone(),
                uploaded_at: meta.date,
            },
        );
        Ok(())
    }

    fn owned_mut(&mut self, ctx: &TxContext, addr: Address, hash: Hash) -> Result<&mut FileData, Revert> {
        if addr.is_zero() {
            return Err(Revert::EmptyAddress);
        }
        if hash.is_zero() {
            return Err(Revert::EmptyHash);
        }
        let file = self.file_mapping.get_mut(&hash).ok_or(Revert::UnknownHash)?;
        if file.owner != ctx.caller {
            return Err(Revert::NotOwner);
        }
        Ok(file)
    }

    pub fn grant_access(&mut self, ctx: &TxContext, addr: Address, hash: Hash) -> Result<(), Revert> {
        let file = self.owned_mut(ctx, addr, hash)?;
        file.access.insert(addr, true);
        if !file.allowed_addresses.contains(&addr) {
            file.allowed_addresses.push(addr);
        }
        Ok(())
    }

    /// Clears the access flag. The address stays in `allowedAddresses`.
    pub fn remove_access(&mut self, ctx: &TxContext, addr: Address, hash: Hash) -> Result<(), Revert> {
        let file = self.owned_mut(ctx, addr, hash)?;
        if let Some(flag) = file.access.get_mut(&addr) {
            *flag = false;
        }
        Ok(())
    }

    pub fn music_owner(&self, ctx: &TxContext, hash: &Hash) -> bool {
        if hash.is_zero() {
            return false;
        }
        self.file_mapping.get(hash).is_some_and(|f| f.owner == ctx.caller)
    }

    /// True for the owner and for any address whose access flag is set.
    pub fn chk_access(&self, addr: &Address, hash: &Hash) -> bool {
        if addr.is_zero() || hash.is_zero() {
            return false;
        }
        match self.file_mapping.get(hash) {
            None => false,
            Some(f) if f.owner == *addr => true,
            Some(f) => f.access.get(addr).copied().unwrap_or(false),
        }
    }

    /// Records one payment at the file's price, grants the caller access and
    /// counts the download. Every call counts, including repeat and owner
    /// downloads.
    pub fn pay_and_download(&mut self, ctx: &TxContext, hash: Hash) -> Result<DownloadGrant, Revert> {
        if ctx.caller.is_zero() {
            return Err(Revert::EmptyCaller);
        }
        let file = self.file_mapping.get_mut(&hash).ok_or(Revert::UnknownHash)?;
        file.access.insert(ctx.caller, true);
        file.downloads += 1;
        let receipt_id = sha256_parts(&[hash.as_bytes(), ctx.caller.as_bytes(), &file.downloads.to_be_bytes()]);
        Ok(DownloadGrant {
            hash,
            granted_to: ctx.caller,
            receipt_id,
            downloads: file.downloads,
            price_cents: file.price_cents,
        })
    }

    /// downloads × price, in cents. `None` for an unregistered hash.
    pub fn revenue(&self, hash: &Hash) -> Option<u64> {
        self.file_mapping.get(hash).map(|f| f.downloads * f.price_cents)
    }

    /// One row per file, newest upload first.
    pub fn revenue_report(&self) -> Vec<RevenueRow> {
        let mut rows: Vec<RevenueRow> = self
            .file_mapping
            .iter()
            .map(|(root, f)| RevenueRow {
                root: *root,
                author: f.author.clone(),
                title: f.title.clone(),
                uploaded_at: f.uploaded_at,
                downloads: f.downloads,
                revenue_cents: f.downloads * f.price_cents,
            })
            .collect();
        rows.sort_by(|a, b| b.uploaded_at.cmp(&a.uploaded_at).then(a.root.cmp(&b.root)));
        rows
    }
}

/// Renders cents as `$D.CC`.
pub fn format_cents(cents: u64) -> String {
    format!("${}.{:02}", cents / 100, cents % 100)
}
