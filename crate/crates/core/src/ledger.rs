//! A node's replicated application state: contract storage plus the
//! credential registry, driven by chain transactions.

use serde::{Deserialize, Serialize};

use crate::address::Address;
use crate::canonical::to_canonical_bytes;
use crate::contract::{ContractState, DownloadGrant, Revert, TxContext};
use crate::hash::{sha256, Hash};
use crate::identity::{IdentityError, Registry};
use crate::tx::{Transaction, TxKind};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LedgerError {
    #[error("reverted: {0}")]
    Revert(#[from] Revert),
    #[error(transparent)]
    Identity(#[from] IdentityError),
    #[error("caller {0} is not a registered user")]
    UnregisteredCaller(Address),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TxEffect {
    Registered(Address),
    Added,
    Granted,
    Removed,
    Downloaded(DownloadGrant),
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ledger {
    pub contract: ContractState,
    pub registry: Registry,
}

impl Ledger {
    pub fn new() -> Self {
        Self::default()
    }

    /// Applies one transaction; on error the ledger is unchanged.
    pub fn apply(&mut self, tx: &Transaction) -> Result<TxEffect, LedgerError> {
        if tx.kind == TxKind::Register {
            return Ok(TxEffect::Registered(self.registry.apply_registration(tx)?));
        }
        if !self.registry.is_registered(&tx.caller) {
            return Err(LedgerError::UnregisteredCaller(tx.caller));
        }
        let ctx = TxContext::new(tx.caller, tx.timestamp);
        let effect = match tx.kind {
            TxKind::Register => unreachable!(),
            TxKind::AddBlock => {
                let (Some(fp), Some(meta), Some(price)) = (&tx.fingerprint, &tx.meta, tx.cents) else {
                    return Err(Revert::Malformed("add_block needs fingerprint, meta and cents").into());
                };
                self.contract.add_block(&ctx, tx.hash, fp, meta, price)?;
                TxEffect::Added
            }
            TxKind::GrantAccess => {
                let addr = tx.addr.ok_or(Revert::Malformed("grant_access needs addr"))?;
                self.contract.grant_access(&ctx, addr, tx.hash)?;
                TxEffect::Granted
            }
            TxKind::RemoveAccess => {
                let addr = tx.addr.ok_or(Revert::Malformed("remove_access needs addr"))?;
                self.contract.remove_access(&ctx, addr, tx.hash)?;
                TxEffect::Removed
            }
            TxKind::PayAndDownload => {
                let paid = tx.cents.ok_or(Revert::Malformed("pay_and_download needs cents"))?;
                if ctx.caller.is_zero() {
                    return Err(Revert::EmptyCaller.into());
                }
                let price = self.contract.get(&tx.hash).ok_or(Revert::UnknownHash)?.price_cents;
                if paid != price {
                    return Err(Revert::PriceMismatch { paid, price }.into());
                }
                TxEffect::Downloaded(self.contract.pay_and_download(&ctx, tx.hash)?)
            }
        };
        Ok(effect)
    }

    /// SHA-256 of the canonical JSON encoding.
    pub fn digest(&self) -> Hash {
        sha256(&to_canonical_bytes(self))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chunkstore::FileMeta;
    use crate::identity::Credential;

    #[test]
    fn contract_calls_require_registered_caller() {
        let mut ledger = Ledger::new();
        let (alice, reg) = ledger.registry.clone().register(&Credential::new("a@b.c", "pw").unwrap(), 1).unwrap();
        let fp = sha256(b"fp").to_hex().parse().unwrap();
        let meta = FileMeta { author: "a".into(), title: "t".into(), date: 1 };
        let add = Transaction::add_block(alice, sha256(b"root"), fp, meta, 137, 2);

        assert_eq!(ledger.apply(&add), Err(LedgerError::UnregisteredCaller(alice)));
        assert_eq!(ledger.apply(&reg), Ok(TxEffect::Registered(alice)));
        assert_eq!(ledger.apply(&add), Ok(TxEffect::Added));

        let underpaid = Transaction::pay_and_download(alice, sha256(b"root"), 100, 3);
        let before = ledger.digest();
        assert!(matches!(ledger.apply(&underpaid), Err(LedgerError::Revert(Revert::PriceMismatch { .. }))));
        assert_eq!(ledger.digest(), before);

        let paid = Transaction::pay_and_download(alice, sha256(b"root"), 137, 3);
        assert!(matches!(ledger.apply(&paid), Ok(TxEffect::Downloaded(_))));
        assert_eq!(ledger.contract.revenue(&sha256(b"root")), Some(137));
    }
}
