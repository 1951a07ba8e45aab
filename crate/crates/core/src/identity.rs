//! Registration and login against credential hashes recorded on chain.
//!
//! Credential hashes are unsalted SHA-256, so equal credentials always map to
//! the same record. Only the hash and the derived address are ever stored.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::address::Address;
use crate::chain::ParentBlock;
use crate::hash::{sha256, sha256_parts, Hash};
use crate::tx::{Transaction, TxKind};

const FIELD_SEPARATOR: u8 = 0x1f;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum IdentityError {
    #[error("invalid credential: {0}")]
    InvalidCredential(&'static str),
    #[error("already registered")]
    AlreadyRegistered,
    #[error("registration record does not derive address {0}")]
    AddressMismatch(Address),
}

#[derive(Clone, PartialEq, Eq)]
pub struct Credential {
    email: String,
    password: String,
}

impl std::fmt::Debug for Credential {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Credential").field("email", &self.email).finish_non_exhaustive()
    }
}

impl Credential {
    pub fn new(email: &str, password: &str) -> Result<Self, IdentityError> {
        if email.is_empty() {
            return Err(IdentityError::InvalidCredential("email is empty"));
        }
        if password.is_empty() {
            return Err(IdentityError::InvalidCredential("password is empty"));
        }
        if email.matches('@').count() != 1 {
            return Err(IdentityError::InvalidCredential("email must contain exactly one '@'"));
        }
        Ok(Credential { email: email.to_lowercase(), password: password.to_string() })
    }

    pub fn email(&self) -> &str {
        &self.email
    }

    /// SHA-256(lowercase email || 0x1F || password).
    pub fn hash(&self) -> Hash {
        sha256_parts(&[self.email.as_bytes(), &[FIELD_SEPARATOR], self.password.as_bytes()])
    }
}

/// First 20 bytes of SHA-256(credential hash || "addr").
pub fn derive_address(credential_hash: &Hash) -> Address {
    let mut buf = credential_hash.0.to_vec();
    buf.extend_from_slice(b"addr");
    Address::from_prefix(sha256(&buf).as_bytes())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AuthOutcome {
    Granted(Address),
    Revoked,
}

/// Credential hashes seen in registration transactions.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Registry {
    users: BTreeMap<Hash, Address>,
}

impl Registry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.users.len()
    }

    pub fn is_empty(&self) -> bool {
        self.users.is_empty()
    }

    pub fn is_registered(&self, address: &Address) -> bool {
        self.users.values().any(|a| a == address)
    }

    /// Records a new credential and returns the registration transaction to
    /// put on chain.
    pub fn register(&mut self, cred: &Credential, now: u64) -> Result<(Address, Transaction), IdentityError> {
        let hash = cred.hash();
        if self.users.contains_key(&hash) {
            return Err(IdentityError::AlreadyRegistered);
        }
        let address = derive_address(&hash);
        self.users.insert(hash, address);
        Ok((address, Transaction::register(address, hash, now)))
    }

    /// Replays a registration transaction produced elsewhere.
    pub fn apply_registration(&mut self, tx: &Transaction) -> Result<Address, IdentityError> {
        debug_assert_eq!(tx.kind, TxKind::Register);
        if derive_address(&tx.hash) != tx.caller {
            return Err(IdentityError::AddressMismatch(tx.caller));
        }
        if self.users.contains_key(&tx.hash) {
            return Err(IdentityError::AlreadyRegistered);
        }
        self.users.insert(tx.hash, tx.caller);
        Ok(tx.caller)
    }

    pub fn authenticate(&self, cred: &Credential) -> AuthOutcome {
        match self.users.get(&cred.hash()) {
            Some(address) => AuthOutcome::Granted(*address),
            None => AuthOutcome::Revoked,
        }
    }

    /// Rebuilds the registry from the registration records of a chain.
    pub fn from_chain(blocks: &[ParentBlock]) -> Result<Self, IdentityError> {
        let mut registry = Registry::new();
        for tx in blocks.iter().flat_map(|b| &b.transactions) {
            if tx.kind == TxKind::Register {
                registry.apply_registration(tx)?;
            }
        }
        Ok(registry)
    }
}
