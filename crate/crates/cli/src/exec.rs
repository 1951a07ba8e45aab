//! Runs commands against a loaded network and persists what they commit.

use std::fs;
use std::path::Path;

use tunechain_core::canonical::to_canonical_string;
use tunechain_core::chunkstore::{FileManifest, FileMeta};
use tunechain_core::contract::format_cents;
use tunechain_core::fingerprint::fingerprint_wav;
use tunechain_core::identity::{AuthOutcome, Credential, IdentityError};
use tunechain_core::ledger::LedgerError;
use tunechain_core::netsim::{NetError, SimNetwork, StoreOutcome};
use tunechain_core::{Address, Hash};

use crate::command::Command;
use crate::report::{parse_date, revenue_table};
use crate::store::{Datadir, StoreError};

pub mod code {
    pub const OK: u8 = 0;
    pub const DENIED: u8 = 1;
    pub const ALREADY_REGISTERED: u8 = 2;
    pub const COPYRIGHT_VIOLATION: u8 = 3;
    pub const UNKNOWN_ROOT: u8 = 4;
    pub const INTEGRITY: u8 = 5;
    pub const REVERTED: u8 = 6;
    pub const OUT_OF_RANGE: u8 = 7;
    pub const CORRUPT_DATADIR: u8 = 8;
    pub const SCENARIO_MISMATCH: u8 = 10;
    pub const USAGE: u8 = 64;
    pub const DATA_FORMAT: u8 = 65;
    pub const NO_INPUT: u8 = 66;
    pub const INTERNAL: u8 = 70;
    pub const CANT_CREATE: u8 = 73;
    pub const IO: u8 = 74;
    pub const LOCKED: u8 = 75;
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Outcome {
    pub code: u8,
    pub stdout: String,
    pub stderr: String,
    /// The address or root a scenario step can bind.
    pub value: Option<String>,
}

impl Outcome {
    pub fn ok(stdout: String) -> Self {
        Outcome { stdout, ..Default::default() }
    }

    pub fn fail(code: u8, msg: impl std::fmt::Display) -> Self {
        Outcome { code, stderr: format!("{msg}\n"), ..Default::default() }
    }

    fn with_value(mut self, v: impl ToString) -> Self {
        self.value = Some(v.to_string());
        self
    }
}

pub fn store_error(e: &StoreError) -> Outcome {
    let c = match e {
        StoreError::Io { .. } => code::IO,
        StoreError::Locked(_) => code::LOCKED,
        StoreError::ConfigConflict { .. } | StoreError::BadConfig(_) => code::USAGE,
        StoreError::Corrupt(_) => code::CORRUPT_DATADIR,
    };
    Outcome::fail(c, e)
}

fn parse_address(s: &str) -> Result<Address, Outcome> {
    s.parse()
        .map_err(|_| Outcome::fail(code::USAGE, format!("invalid address `{s}` (expected 40 lowercase hex digits)")))
}

fn parse_root(s: &str) -> Result<Hash, Outcome> {
    s.parse().map_err(|_| Outcome::fail(code::USAGE, format!("invalid root `{s}` (expected 64 lowercase hex digits)")))
}

fn read_input(path: &Path) -> Result<Vec<u8>, Outcome> {
    fs::read(path).map_err(|e| Outcome::fail(code::NO_INPUT, format!("{}: {e}", path.display())))
}

/// `fingerprint FILE` needs no datadir.
pub fn fingerprint_file(path: &Path) -> Outcome {
    let bytes = match read_input(path) {
        Ok(b) => b,
        Err(o) => return o,
    };
    match fingerprint_wav(&bytes) {
        Ok(fp) => Outcome::ok(format!("{fp}\n")).with_value(fp),
        Err(e) => Outcome::fail(code::DATA_FORMAT, format!("{}: {e}", path.display())),
    }
}

fn internal(e: impl std::fmt::Display) -> Outcome {
    Outcome::fail(code::INTERNAL, format!("internal error: {e}"))
}

pub struct Session {
    pub dir: Datadir,
    pub net: SimNetwork,
}

impl Session {
    pub fn open(mut dir: Datadir) -> Result<Session, StoreError> {
        let net = dir.load()?;
        Ok(Session { dir, net })
    }

    pub fn execute(&mut self, cmd: &Command) -> Outcome {
        let out = self.dispatch(cmd).unwrap_or_else(|o| o);
        if cmd.mutates() {
            // nothing is carried between commands
            self.net.discard_pending();
            if let Err(e) = self.dir.sync(&self.net) {
                return store_error(&e);
            }
            self.net.settle_clock();
        }
        out
    }

    fn commit(&mut self) -> Result<(), Outcome> {
        self.net.commit().map(|_| ()).map_err(internal)
    }

    fn dispatch(&mut self, cmd: &Command) -> Result<Outcome, Outcome> {
        match cmd {
            Command::Register { email, password } => {
                let cred = Credential::new(email, password).map_err(|e| Outcome::fail(code::USAGE, e))?;
                match self.net.register_user(&cred) {
                    Ok(addr) => {
                        self.commit()?;
                        Ok(Outcome::ok(format!("{addr}\n")).with_value(addr))
                    }
                    Err(NetError::Identity(IdentityError::AlreadyRegistered)) => {
                        Err(Outcome::fail(code::ALREADY_REGISTERED, "already registered"))
                    }
                    Err(e) => Err(internal(e)),
                }
            }
            Command::Login { email, password } => {
                let cred = Credential::new(email, password).map_err(|e| Outcome::fail(code::USAGE, e))?;
                match self.net.authenticate(&cred) {
                    AuthOutcome::Granted(addr) => Ok(Outcome::ok(format!("{addr}\n")).with_value(addr)),
                    AuthOutcome::Revoked => Err(Outcome::fail(code::DENIED, "revoked")),
                }
            }
            Command::Upload { caller, file, author, title, date } => {
                let caller = parse_address(caller)?;
                let bytes = read_input(file)?;
                let date = match date {
                    Some(d) => {
                        parse_date(d).ok_or_else(|| Outcome::fail(code::USAGE, format!("invalid date `{d}`")))?
                    }
                    None => self.net.now(),
                };
                let meta = FileMeta { author: author.clone(), title: title.clone(), date };
                match self.net.store_music(caller, &bytes, meta.clone()) {
                    Ok(StoreOutcome::Stored { root, meta_hash, .. }) => {
                        let (manifest, chunks) = FileManifest::build(&bytes, meta).map_err(internal)?;
                        self.dir.save_file(&manifest, &chunks).map_err(|e| store_error(&e))?;
                        self.commit()?;
                        Ok(Outcome::ok(format!("meta_hash {meta_hash}\nfile_hash {root}\n")).with_value(root))
                    }
                    Ok(StoreOutcome::CopyrightViolation { existing, .. }) => Err(Outcome::fail(
                        code::COPYRIGHT_VIOLATION,
                        format!("copyright violation: this audio is already registered as {existing}"),
                    )),
                    Err(NetError::UnregisteredUploader(a)) => {
                        Err(Outcome::fail(code::DENIED, format!("{a} is not registered")))
                    }
                    Err(NetError::Audio(e)) => {
                        Err(Outcome::fail(code::DATA_FORMAT, format!("{}: {e}", file.display())))
                    }
                    Err(e) => Err(internal(e)),
                }
            }
            Command::Download { caller, root, out } => {
                let caller = parse_address(caller)?;
                let root = parse_root(root)?;
                let dl = match self.net.download_file(caller, root) {
                    Ok(dl) => dl,
                    Err(NetError::UnregisteredRequester(a)) => {
                        return Err(Outcome::fail(code::DENIED, format!("{a} is not registered")))
                    }
                    Err(NetError::NotFound(h)) => {
                        return Err(Outcome::fail(code::UNKNOWN_ROOT, format!("unknown root {h}")))
                    }
                    Err(e @ (NetError::ChunkUnavailable { .. } | NetError::Chunk(_))) => {
                        return Err(Outcome::fail(code::INTEGRITY, format!("integrity failure: {e}")))
                    }
                    Err(e) => return Err(internal(e)),
                };
                fs::write(out, &dl.bytes)
                    .map_err(|e| Outcome::fail(code::CANT_CREATE, format!("{}: {e}", out.display())))?;
                self.commit()?;
                Ok(Outcome::ok(format!(
                    "root {}\nprice {}\ndownloads {}\nreceipt {}\n",
                    dl.grant.hash,
                    format_cents(dl.grant.price_cents),
                    dl.grant.downloads,
                    dl.grant.receipt_id
                ))
                .with_value(dl.grant.hash))
            }
            Command::Grant { caller, addr, root } | Command::Revoke { caller, addr, root } => {
                let caller = parse_address(caller)?;
                let addr = parse_address(addr)?;
                let root = parse_root(root)?;
                let grant = matches!(cmd, Command::Grant { .. });
                let res = if grant {
                    self.net.grant_access(caller, addr, root)
                } else {
                    self.net.remove_access(caller, addr, root)
                };
                match res {
                    Ok(()) => {
                        self.commit()?;
                        let verb = if grant { "granted" } else { "revoked" };
                        Ok(Outcome::ok(format!("{verb} {addr} on {root}\n")))
                    }
                    Err(NetError::Rejected(LedgerError::Revert(r))) => Err(Outcome::fail(code::REVERTED, r)),
                    Err(NetError::Rejected(LedgerError::UnregisteredCaller(a))) => {
                        Err(Outcome::fail(code::DENIED, format!("{a} is not registered")))
                    }
                    Err(e) => Err(internal(e)),
                }
            }
            Command::Revenue => Ok(Outcome::ok(revenue_table(&self.net.ledger().contract.revenue_report()))),
            Command::ExploreHeight(h) => {
                let chain = self.net.chain();
                match usize::try_from(*h).ok().and_then(|i| chain.blocks().get(i)) {
                    Some(b) => Ok(Outcome::ok(format!("{}\n", b.to_canonical_json())).with_value(b.hash)),
                    None => Err(Outcome::fail(
                        code::OUT_OF_RANGE,
                        format!("height {h} out of range (chain has {} blocks)", chain.len()),
                    )),
                }
            }
            Command::ExploreViolations => {
                let list: Vec<_> = self
                    .net
                    .side_chain()
                    .violations()
                    .map(|v| serde_json::json!({"tov": v.tov, "uid": v.uid, "vt": v.vt, "nid": v.nid}))
                    .collect();
                Ok(Outcome::ok(format!("{}\n", to_canonical_string(&list))))
            }
            Command::Fingerprint { file } => Ok(fingerprint_file(file)),
        }
    }
}
