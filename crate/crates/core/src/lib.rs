//! Deterministic simulator of a copyright-enforcing music sharing network.
//!
//! The crate is split along the system's moving parts:
//!
//! * [`fingerprint`]: WAV ingestion and spectral band fingerprints.
//! * [`chunkstore`]: content-addressed chunks, Merkle roots, file manifests.
//! * [`contract`]: the access-control and royalty state machine.
//! * [`chain`]: parent blocks, violation side blocks, stake-weighted election.
//! * [`identity`]: credential registration and login.
//! * [`netsim`]: the multi-node network tying everything together.

pub mod address;
pub mod canonical;
pub mod chain;
pub mod chunkstore;
pub mod contract;
pub mod fingerprint;
pub mod hash;
pub mod identity;
pub mod ledger;
pub mod netsim;
pub mod tx;

pub use address::Address;
pub use hash::Hash;
