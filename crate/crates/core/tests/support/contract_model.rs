//! Brute-force reference for the access/royalty contract, written with plain
//! nested maps and small integer ids. Id 0 stands for the empty address or
//! hash.

#![allow(dead_code)]

use std::collections::HashMap;

use rand::Rng;
use tunechain_core::chunkstore::FileMeta;
use tunechain_core::contract::{ContractState, TxContext};
use tunechain_core::fingerprint::Fingerprint;
use tunechain_core::{Address, Hash};

pub const IDS: u8 = 8;
pub const PRICE: u64 = 137;

#[derive(Debug, Clone, Copy)]
pub enum Call {
    AddBlock { caller: u8, hash: u8, fp: u8 },
    Grant { caller: u8, addr: u8, hash: u8 },
    Remove { caller: u8, addr: u8, hash: u8 },
    MusicOwner { caller: u8, hash: u8 },
    ChkAccess { addr: u8, hash: u8 },
    Pay { caller: u8, hash: u8 },
    Revenue { hash: u8 },
}

/// (hash, owner, sorted access flags, allowed list, downloads) per file.
pub type Summary = Vec<(u8, u8, Vec<(u8, bool)>, Vec<u8>, u64)>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Output {
    Unit,
    Bool(bool),
    Downloads(u64),
    Cents(Option<u64>),
    Revert(String),
}

#[derive(Debug, Clone, Default)]
struct File {
    owner: u8,
    fp: u8,
    access: HashMap<u8, bool>,
    allowed: Vec<u8>,
    downloads: u64,
}

#[derive(Debug, Clone, Default)]
pub struct Model {
    files: HashMap<u8, File>,
}

fn revert(s: &str) -> Output {
    Output::Revert(s.to_string())
}

impl Model {
    pub fn apply(&mut self, call: Call) -> Output {
        match call {
            Call::AddBlock { caller, hash, fp } => {
                if caller == 0 {
                    return revert("empty caller");
                }
                if hash == 0 {
                    return revert("empty hash");
                }
                if self.files.contains_key(&hash) {
                    return revert("exists");
                }
                for f in self.files.values() {
                    if f.fp == fp {
                        return revert("duplicate fingerprint");
                    }
                }
                self.files.insert(hash, File { owner: caller, fp, ..File::default() });
                Output::Unit
            }
            Call::Grant { caller, addr, hash } | Call::Remove { caller, addr, hash } => {
                if addr == 0 {
                    return revert("empty address");
                }
                if hash == 0 {
                    return revert("empty hash");
                }
                let Some(f) = self.files.get_mut(&hash) else {
                    return revert("unknown hash");
                };
                if f.owner != caller {
                    return revert("not owner");
                }
                if matches!(call, Call::Grant { .. }) {
                    f.access.insert(addr, true);
                    if !f.allowed.contains(&addr) {
                        f.allowed.push(addr);
                    }
                } else if f.access.contains_key(&addr) {
                    f.access.insert(addr, false);
                }
                Output::Unit
            }
            Call::MusicOwner { caller, hash } => {
                Output::Bool(hash != 0 && self.files.get(&hash).map(|f| f.owner == caller).unwrap_or(false))
            }
            Call::ChkAccess { addr, hash } => {
                if addr == 0 || hash == 0 {
                    return Output::Bool(false);
                }
                Output::Bool(match self.files.get(&hash) {
                    None => false,
                    Some(f) => f.owner == addr || *f.access.get(&addr).unwrap_or(&false),
                })
            }
            Call::Pay { caller, hash } => {
                if caller == 0 {
                    return revert("empty caller");
                }
                let Some(f) = self.files.get_mut(&hash) else {
                    return revert("unknown hash");
                };
                f.access.insert(caller, true);
                f.downloads += 1;
                Output::Downloads(f.downloads)
            }
            Call::Revenue { hash } => Output::Cents(self.files.get(&hash).map(|f| f.downloads * PRICE)),
        }
    }

    pub fn summary(&self) -> Summary {
        let mut out: Vec<_> = self
            .files
            .iter()
            .map(|(h, f)| {
                let mut access: Vec<_> = f.access.iter().map(|(a, b)| (*a, *b)).collect();
                access.sort();
                (*h, f.owner, access, f.allowed.clone(), f.downloads)
            })
            .collect();
        out.sort();
        out
    }
}

pub fn address(id: u8) -> Address {
    if id == 0 {
        Address::ZERO
    } else {
        Address([id; 20])
    }
}

pub fn hash(id: u8) -> Hash {
    if id == 0 {
        Hash::ZERO
    } else {
        Hash([id; 32])
    }
}

pub fn fingerprint(id: u8) -> Fingerprint {
    format!("{:064x}", id as u64 + 1).parse().unwrap()
}

/// Runs `call` against the real contract.
pub fn execute(state: &mut ContractState, call: Call) -> Output {
    let ctx = |c: u8| TxContext::new(address(c), 0);
    let unit = |r: Result<(), tunechain_core::contract::Revert>| match r {
        Ok(()) => Output::Unit,
        Err(e) => Output::Revert(e.to_string()),
    };
    match call {
        Call::AddBlock { caller, hash: h, fp } => {
            let meta = FileMeta { author: "a".into(), title: format!("t{h}"), date: h as u64 };
            unit(state.add_block(&ctx(caller), hash(h), &fingerprint(fp), &meta, PRICE))
        }
        Call::Grant { caller, addr, hash: h } => unit(state.grant_access(&ctx(caller), address(addr), hash(h))),
        Call::Remove { caller, addr, hash: h } => unit(state.remove_access(&ctx(caller), address(addr), hash(h))),
        Call::MusicOwner { caller, hash: h } => Output::Bool(state.music_owner(&ctx(caller), &hash(h))),
        Call::ChkAccess { addr, hash: h } => Output::Bool(state.chk_access(&address(addr), &hash(h))),
        Call::Pay { caller, hash: h } => match state.pay_and_download(&ctx(caller), hash(h)) {
            Ok(g) => Output::Downloads(g.downloads),
            Err(e) => Output::Revert(e.to_string()),
        },
        Call::Revenue { hash: h } => Output::Cents(state.revenue(&hash(h))),
    }
}

/// The same summary as [`Model::summary`], read back from the contract.
pub fn summarize(state: &ContractState) -> Summary {
    let mut out: Vec<_> = state
        .file_mapping
        .iter()
        .map(|(h, f)| {
            let access = f.access.iter().map(|(a, b)| (a.0[0], *b)).collect();
            let allowed = f.allowed_addresses.iter().map(|a| a.0[0]).collect();
            (h.0[0], f.owner.0[0], access, allowed, f.downloads)
        })
        .collect();
    out.sort();
    out
}

pub fn random_call<R: Rng>(rng: &mut R) -> Call {
    let mut id = || rng.gen_range(0..IDS);
    let (a, b, c) = (id(), id(), id());
    match rng.gen_range(0..7) {
        0 => Call::AddBlock { caller: a, hash: b, fp: c },
        1 => Call::Grant { caller: a, addr: b, hash: c },
        2 => Call::Remove { caller: a, addr: b, hash: c },
        3 => Call::MusicOwner { caller: a, hash: b },
        4 => Call::ChkAccess { addr: a, hash: b },
        5 => Call::Pay { caller: a, hash: b },
        _ => Call::Revenue { hash: a },
    }
}

/// Runs one call sequence through both the contract and the model. Returns a
/// description of the first divergence, if any.
pub fn check_sequence(calls: &[Call]) -> Result<(), String> {
    let mut model = Model::default();
    let mut state = ContractState::new();
    for (i, &call) in calls.iter().enumerate() {
        let before = serde_json::to_string(&state).unwrap();
        let expected = model.apply(call);
        let actual = execute(&mut state, call);
        if expected != actual {
            return Err(format!("call {i} {call:?}: model {expected:?}, contract {actual:?}"));
        }
        if matches!(actual, Output::Revert(_)) && serde_json::to_string(&state).unwrap() != before {
            return Err(format!("call {i} {call:?} reverted but changed state"));
        }
    }
    if model.summary() != summarize(&state) {
        return Err("final states differ".into());
    }
    Ok(())
}
