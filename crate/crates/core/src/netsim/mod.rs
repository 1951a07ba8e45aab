//! Deterministic in-process network of replicated nodes.
//!
//! A single driver advances the simulation. Client operations (registration,
//! uploads, payments, access changes) are checked against a staged view of
//! the ledger and queued; [`SimNetwork::commit`] runs a consensus round that
//! elects a validator by stake, mints a block from the queue and has every
//! node validate and replay it. Violations go straight to the side chain.

mod dht;

use std::collections::BTreeMap;

use crate::address::Address;
use crate::chain::{
    election_rng, select_validator, Chain, ElectionError, InvalidReason, ParentBlock, SideBlock, SideChain, Validator,
    ViolationTx, ViolationType,
};
use crate::chunkstore::{reassemble, Chunk, ChunkError, ChunkStore, FileManifest, FileMeta};
use crate::contract::{DownloadGrant, DEFAULT_PRICE_CENTS};
use crate::fingerprint::{music_fingerprint, read_wav, AudioError, Fingerprint};
use crate::hash::{sha256_parts, Hash};
use crate::identity::{AuthOutcome, Credential, IdentityError};
use crate::ledger::{Ledger, LedgerError, TxEffect};
use crate::tx::Transaction;

pub use dht::{chunk_key, nearest, xor_distance, Distance};

pub const REPLICATION_FACTOR: usize = 3;
/// 2020-01-01T00:00:00Z.
pub const DEFAULT_START_TIME: u64 = 1_577_836_800;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetConfig {
    pub nodes: usize,
    pub seed: u64,
    pub price_cents: u64,
    pub start_time: u64,
    /// Per-node stake; every node stakes 1 when absent.
    pub stakes: Option<Vec<u64>>,
}

impl Default for NetConfig {
    fn default() -> Self {
        NetConfig { nodes: 4, seed: 42, price_cents: DEFAULT_PRICE_CENTS, start_time: DEFAULT_START_TIME, stakes: None }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum NetError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("uploader {0} is not registered")]
    UnregisteredUploader(Address),
    #[error("requester {0} is not registered")]
    UnregisteredRequester(Address),
    #[error(transparent)]
    Audio(#[from] AudioError),
    #[error(transparent)]
    Chunk(#[from] ChunkError),
    #[error(transparent)]
    Identity(#[from] IdentityError),
    #[error("transaction rejected: {0}")]
    Rejected(#[from] LedgerError),
    #[error(transparent)]
    Election(#[from] ElectionError),
    #[error("{0} not found")]
    NotFound(Hash),
    #[error("no node holds chunk {index} ({hash})")]
    ChunkUnavailable { index: usize, hash: Hash },
    #[error("access denied: {requester} has not paid for {root}")]
    AccessDenied { requester: Address, root: Hash },
    #[error("consensus failure at node {node}: {reason}")]
    ConsensusFailure { node: Address, reason: String },
}

/// One network participant and its replicas.
#[derive(Debug, Clone)]
pub struct SimNode {
    pub node_id: Address,
    pub stake: u64,
    pub store: ChunkStore,
    pub manifests: BTreeMap<Hash, FileManifest>,
    pub ledger: Ledger,
    pub chain: Chain,
    pub side_chain: SideChain,
    node_secret: [u8; 32],
}

impl SimNode {
    fn new(seed: u64, index: u64, stake: u64) -> Self {
        let seed_bytes = seed.to_be_bytes();
        let index_bytes = index.to_be_bytes();
        let id = sha256_parts(&[b"tunechain-node", &seed_bytes, &index_bytes]);
        let secret = sha256_parts(&[b"tunechain-node-secret", &seed_bytes, &index_bytes]);
        SimNode {
            node_id: Address::from_prefix(id.as_bytes()),
            stake,
            store: ChunkStore::new(),
            manifests: BTreeMap::new(),
            ledger: Ledger::new(),
            chain: Chain::new(),
            side_chain: SideChain::new(),
            node_secret: secret.0,
        }
    }

    pub fn node_secret(&self) -> &[u8; 32] {
        &self.node_secret
    }

    /// Digest over the ledger and both chain tips.
    pub fn replica_digest(&self) -> Hash {
        sha256_parts(&[
            self.ledger.digest().as_bytes(),
            self.chain.tip_hash().as_bytes(),
            &(self.chain.len() as u64).to_be_bytes(),
            self.side_chain.tip_hash().as_bytes(),
            &(self.side_chain.len() as u64).to_be_bytes(),
        ])
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundOutcome {
    pub block: ParentBlock,
    pub rejected: Vec<(Transaction, LedgerError)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StoreOutcome {
    Stored {
        root: Hash,
        meta_hash: Hash,
        fingerprint: Fingerprint,
    },
    /// The fingerprint is already registered under `existing`; a violation
    /// was recorded in side block `side_block`.
    CopyrightViolation {
        existing: Hash,
        fingerprint: Fingerprint,
        side_block: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Download {
    pub bytes: Vec<u8>,
    pub grant: DownloadGrant,
}

#[derive(Debug, Clone)]
pub struct SimNetwork {
    config: NetConfig,
    nodes: Vec<SimNode>,
    clock: u64,
    mempool: Vec<Transaction>,
    /// Committed ledger with the mempool applied.
    staged: Ledger,
}

impl SimNetwork {
    pub fn new(config: NetConfig) -> Result<Self, NetError> {
        if config.nodes == 0 {
            return Err(NetError::InvalidConfig("node count must be at least 1".into()));
        }
        let stakes = match &config.stakes {
            Some(s) if s.len() != config.nodes => {
                return Err(NetError::InvalidConfig(format!("{} stakes for {} nodes", s.len(), config.nodes)))
            }
            Some(s) if s.contains(&0) => return Err(NetError::InvalidConfig("stakes must be at least 1".into())),
            Some(s) => s.clone(),
            None => vec![1; config.nodes],
        };
        let nodes = stakes.iter().enumerate().map(|(i, &stake)| SimNode::new(config.seed, i as u64, stake)).collect();
        Ok(SimNetwork { clock: config.start_time, config, nodes, mempool: Vec::new(), staged: Ledger::new() })
    }

    pub fn config(&self) -> &NetConfig {
        &self.config
    }

    pub fn nodes(&self) -> &[SimNode] {
        &self.nodes
    }

    /// Mutable node access for fault injection.
    pub fn node_mut(&mut self, index: usize) -> &mut SimNode {
        &mut self.nodes[index]
    }

    pub fn node_ids(&self) -> Vec<Address> {
        self.nodes.iter().map(|n| n.node_id).collect()
    }

    fn node_index(&self, id: &Address) -> Option<usize> {
        self.nodes.iter().position(|n| n.node_id == *id)
    }

    /// The committed state, as held by the first replica.
    pub fn ledger(&self) -> &Ledger {
        &self.nodes[0].ledger
    }

    /// Committed state plus everything waiting for the next round.
    pub fn staged(&self) -> &Ledger {
        &self.staged
    }

    pub fn chain(&self) -> &Chain {
        &self.nodes[0].chain
    }

    pub fn side_chain(&self) -> &SideChain {
        &self.nodes[0].side_chain
    }

    pub fn mempool(&self) -> &[Transaction] {
        &self.mempool
    }

    pub fn now(&self) -> u64 {
        self.clock
    }

    /// Advances the clock by one second and returns the new time.
    pub fn tick(&mut self) -> u64 {
        self.clock += 1;
        self.clock
    }

    /// Moves the clock forward to `t`; earlier times are ignored.
    pub fn advance_to(&mut self, t: u64) {
        self.clock = self.clock.max(t);
    }

    /// Winds the clock back to the newest timestamp on either chain, dropping
    /// ticks spent by commands that committed nothing. A restored network
    /// starts from the same point.
    pub fn settle_clock(&mut self) {
        let side = self.side_chain().blocks().last().map(|b| b.chain_time).unwrap_or(0);
        let parent = self.chain().tip().map(|b| b.header.timestamp).unwrap_or(0);
        self.clock = self.config.start_time.max(side).max(parent);
    }

    pub fn replica_digests(&self) -> Vec<Hash> {
        self.nodes.iter().map(SimNode::replica_digest).collect()
    }

    pub fn replicas_consistent(&self) -> bool {
        let digests = self.replica_digests();
        digests.windows(2).all(|w| w[0] == w[1])
    }

    pub fn validators(&self) -> Vec<Validator> {
        self.nodes.iter().map(|n| Validator { node_id: n.node_id, stake: n.stake }).collect()
    }

    /// The validator elected for `height`.
    pub fn elected(&self, height: u64) -> Result<Address, NetError> {
        Ok(select_validator(&self.validators(), &mut election_rng(self.config.seed, height))?)
    }

    /// All node ids ordered by XOR distance to the chunk's key.
    pub fn locate_chunk(&self, chunk_hash: &Hash) -> Vec<Address> {
        nearest(self.nodes.iter().map(|n| &n.node_id), &chunk_key(chunk_hash))
    }

    /// The node nearest a user's address; it reports that user's violations.
    fn entry_node(&self, user: &Address) -> usize {
        let id = nearest(self.nodes.iter().map(|n| &n.node_id), user)[0];
        self.node_index(&id).expect("id came from the node list")
    }

    pub fn authenticate(&self, cred: &Credential) -> AuthOutcome {
        self.ledger().registry.authenticate(cred)
    }

    /// Checks `tx` against the staged ledger and queues it for the next round.
    pub fn submit(&mut self, tx: Transaction) -> Result<TxEffect, NetError> {
        let effect = self.staged.apply(&tx)?;
        self.mempool.push(tx);
        Ok(effect)
    }

    pub fn register_user(&mut self, cred: &Credential) -> Result<Address, NetError> {
        let now = self.tick();
        let (address, tx) = self.staged.registry.clone().register(cred, now)?;
        self.submit(tx)?;
        Ok(address)
    }

    pub fn grant_access(&mut self, owner: Address, addr: Address, root: Hash) -> Result<(), NetError> {
        let now = self.tick();
        self.submit(Transaction::grant_access(owner, addr, root, now)).map(|_| ())
    }

    pub fn remove_access(&mut self, owner: Address, addr: Address, root: Hash) -> Result<(), NetError> {
        let now = self.tick();
        self.submit(Transaction::remove_access(owner, addr, root, now)).map(|_| ())
    }

    /// Drops every queued transaction, returning them.
    pub fn discard_pending(&mut self) -> Vec<Transaction> {
        let dropped = std::mem::take(&mut self.mempool);
        self.restage();
        dropped
    }

    /// Runs a consensus round over the mempool.
    pub fn commit(&mut self) -> Result<RoundOutcome, NetError> {
        let pending = std::mem::take(&mut self.mempool);
        self.consensus_round(pending)
    }

    /// Elects a validator, lets it replay `pending` against its ledger,
    /// mints a block from the transactions that apply and broadcasts it.
    pub fn consensus_round(&mut self, pending: Vec<Transaction>) -> Result<RoundOutcome, NetError> {
        let height = self.chain().len() as u64;
        let validator_id = self.elected(height)?;
        let validator = &self.nodes[self.node_index(&validator_id).expect("elected id is a node")];

        let mut scratch = validator.ledger.clone();
        let mut included = Vec::new();
        let mut rejected = Vec::new();
        for tx in pending {
            match scratch.apply(&tx) {
                Ok(_) => included.push(tx),
                Err(e) => rejected.push((tx, e)),
            }
        }
        let prev = validator.chain.tip_hash();
        let now = self.tick();
        let block = ParentBlock::mint(prev, included, validator_id, now);
        self.broadcast_block(block.clone())?;
        self.restage();
        Ok(RoundOutcome { block, rejected })
    }

    /// Rebuilds the staged ledger from committed state and the mempool,
    /// dropping queued transactions that no longer apply.
    fn restage(&mut self) {
        let mut staged = self.ledger().clone();
        self.mempool.retain(|tx| staged.apply(tx).is_ok());
        self.staged = staged;
    }

    /// Every node validates the block (election, linkage, Merkle root,
    /// transaction replay). The block is appended only if all nodes accept it.
    pub fn broadcast_block(&mut self, block: ParentBlock) -> Result<(), NetError> {
        let mut next_ledgers = Vec::with_capacity(self.nodes.len());
        for node in &self.nodes {
            let fail = |reason: String| NetError::ConsensusFailure { node: node.node_id, reason };
            let height = node.chain.len() as u64;
            if block.validator != self.elected(height)? {
                return Err(fail(InvalidReason::WrongValidator.to_string()));
            }
            block.check(&node.chain.tip_hash()).map_err(|r| fail(r.to_string()))?;
            let mut ledger = node.ledger.clone();
            for (i, tx) in block.transactions.iter().enumerate() {
                ledger.apply(tx).map_err(|e| fail(format!("transaction {i} does not replay: {e}")))?;
            }
            next_ledgers.push(ledger);
        }
        for (node, ledger) in self.nodes.iter_mut().zip(next_ledgers) {
            node.chain.push_checked(block.clone()).expect("checked above");
            node.ledger = ledger;
        }
        self.advance_to(block.header.timestamp);
        Ok(())
    }

    /// Every node checks the side block and the reporter's tag before any
    /// node appends it.
    pub fn broadcast_side_block(&mut self, block: SideBlock) -> Result<(), NetError> {
        let secrets: BTreeMap<Address, [u8; 32]> = self.nodes.iter().map(|n| (n.node_id, n.node_secret)).collect();
        for node in &self.nodes {
            let fail = |reason: String| NetError::ConsensusFailure { node: node.node_id, reason };
            for v in &block.violations {
                let ok = secrets.get(&v.nid).is_some_and(|s| v.verify(s));
                if !ok {
                    return Err(fail(InvalidReason::BadSignature.to_string()));
                }
            }
            let mut probe = node.side_chain.clone();
            probe.push_checked(block.clone()).map_err(|e| fail(e.to_string()))?;
        }
        for node in &mut self.nodes {
            node.side_chain.push_checked(block.clone()).expect("checked above");
        }
        self.advance_to(block.chain_time);
        Ok(())
    }

    /// Signs a violation at the user's entry node and broadcasts it.
    pub fn record_violation(&mut self, user: Address, vt: ViolationType) -> Result<SideBlock, NetError> {
        let now = self.tick();
        let reporter = &self.nodes[self.entry_node(&user)];
        let violation = ViolationTx::signed(now, user, vt, reporter.node_id, &reporter.node_secret);
        let block = reporter.side_chain.build(violation, reporter.chain.tip_hash(), now);
        self.broadcast_side_block(block.clone())?;
        Ok(block)
    }

    /// Fingerprints an upload, rejects it if the fingerprint is already
    /// registered, otherwise distributes its chunks and queues `add_block`.
    pub fn store_music(
        &mut self,
        uploader: Address,
        wav_bytes: &[u8],
        meta: FileMeta,
    ) -> Result<StoreOutcome, NetError> {
        if !self.staged.registry.is_registered(&uploader) {
            return Err(NetError::UnregisteredUploader(uploader));
        }
        let audio = read_wav(wav_bytes)?;
        let fingerprint = music_fingerprint(&audio);

        let mut copyright_exist = None;
        for (root, server_fp) in self.staged.contract.fingerprints() {
            if *server_fp == fingerprint {
                copyright_exist = Some(*root);
            }
        }
        if let Some(existing) = copyright_exist {
            let block = self.record_violation(uploader, ViolationType::DuplicateUpload)?;
            return Ok(StoreOutcome::CopyrightViolation { existing, fingerprint, side_block: block.id });
        }

        let (manifest, chunks) = FileManifest::build(wav_bytes, meta.clone())?;
        let root = manifest.root;
        let now = self.tick();
        self.submit(Transaction::add_block(
            uploader,
            root,
            fingerprint.clone(),
            meta.clone(),
            self.config.price_cents,
            now,
        ))?;
        self.place_file(&manifest, chunks);
        Ok(StoreOutcome::Stored { root, meta_hash: meta.meta_hash(), fingerprint })
    }

    /// Puts each chunk on its DHT-nearest holders and the manifest on every node.
    pub fn place_file(&mut self, manifest: &FileManifest, chunks: Vec<Chunk>) {
        let copies = REPLICATION_FACTOR.min(self.nodes.len());
        for chunk in chunks {
            let hash = chunk.hash();
            for id in self.locate_chunk(&hash).into_iter().take(copies) {
                let i = self.node_index(&id).expect("located ids are nodes");
                self.nodes[i].store.put(chunk.clone());
            }
        }
        for node in &mut self.nodes {
            node.manifests.insert(manifest.root, manifest.clone());
        }
    }

    /// Registers a manifest on every node without touching chunk stores.
    pub fn place_manifest(&mut self, manifest: &FileManifest) {
        for node in &mut self.nodes {
            node.manifests.insert(manifest.root, manifest.clone());
        }
    }

    /// Puts stored chunk bytes under `hash` on its DHT-nearest holders as-is.
    /// Bytes that no longer match `hash` are caught when the file is
    /// reassembled.
    pub fn place_stored_chunk(&mut self, hash: Hash, chunk: Chunk) {
        let copies = REPLICATION_FACTOR.min(self.nodes.len());
        for id in self.locate_chunk(&hash).into_iter().take(copies) {
            let i = self.node_index(&id).expect("located ids are nodes");
            self.nodes[i].store.overwrite_unchecked(hash, chunk.clone());
        }
    }

    pub fn manifest(&self, root: &Hash) -> Option<&FileManifest> {
        self.nodes.iter().find_map(|n| n.manifests.get(root))
    }

    /// Fetches a chunk from the nearest node that holds it.
    fn fetch_chunk(&self, hash: &Hash) -> Result<Chunk, ChunkError> {
        self.locate_chunk(hash)
            .iter()
            .filter_map(|id| self.nodes.iter().find(|n| n.node_id == *id))
            .find_map(|n| n.store.get(hash).ok())
            .ok_or(ChunkError::NotFound(*hash))
    }

    fn fetch_file(&self, manifest: &FileManifest) -> Result<Vec<u8>, NetError> {
        reassemble(manifest, |_, h| self.fetch_chunk(h)).map_err(|e| match e {
            ChunkError::NotFound(hash) => NetError::ChunkUnavailable {
                index: manifest.chunk_hashes.iter().position(|h| *h == hash).unwrap_or(0),
                hash,
            },
            other => NetError::Chunk(other),
        })
    }

    /// Paid download: fetches and verifies the file, then queues the payment.
    pub fn download_file(&mut self, requester: Address, root: Hash) -> Result<Download, NetError> {
        if !self.staged.registry.is_registered(&requester) {
            return Err(NetError::UnregisteredRequester(requester));
        }
        let price = self.staged.contract.get(&root).ok_or(NetError::NotFound(root))?.price_cents;
        let manifest = self.manifest(&root).ok_or(NetError::NotFound(root))?.clone();
        let bytes = self.fetch_file(&manifest)?;
        let now = self.tick();
        match self.submit(Transaction::pay_and_download(requester, root, price, now))? {
            TxEffect::Downloaded(grant) => Ok(Download { bytes, grant }),
            other => unreachable!("payment produced {other:?}"),
        }
    }

    /// Chunk access without a payment. Allowed only for addresses the
    /// contract already lets in; anyone else is refused and reported.
    pub fn fetch_chunk_direct(&mut self, requester: Address, root: Hash, index: usize) -> Result<Chunk, NetError> {
        if !self.staged.contract.chk_access(&requester, &root) {
            self.record_violation(requester, ViolationType::UnauthorizedDownload)?;
            return Err(NetError::AccessDenied { requester, root });
        }
        let manifest = self.manifest(&root).ok_or(NetError::NotFound(root))?;
        let hash = *manifest.chunk_hashes.get(index).ok_or(NetError::NotFound(root))?;
        self.fetch_chunk(&hash).map_err(|_| NetError::ChunkUnavailable { index, hash })
    }

    /// Rebuilds a network from persisted chains, replaying every block
    /// through normal validation.
    pub fn restore(config: NetConfig, chain: &Chain, side_chain: &SideChain) -> Result<Self, NetError> {
        let mut net = SimNetwork::new(config)?;
        for block in chain.blocks() {
            net.broadcast_block(block.clone())?;
        }
        for block in side_chain.blocks() {
            net.broadcast_side_block(block.clone())?;
        }
        net.restage();
        Ok(net)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn node_count_must_be_positive() {
        let cfg = NetConfig { nodes: 0, ..NetConfig::default() };
        assert!(matches!(SimNetwork::new(cfg), Err(NetError::InvalidConfig(_))));
        let cfg = NetConfig { stakes: Some(vec![1, 0, 1, 1]), ..NetConfig::default() };
        assert!(matches!(SimNetwork::new(cfg), Err(NetError::InvalidConfig(_))));
    }

    #[test]
    fn single_node_locates_itself() {
        let net = SimNetwork::new(NetConfig { nodes: 1, ..NetConfig::default() }).unwrap();
        assert_eq!(net.locate_chunk(&Hash([9; 32])), net.node_ids());
    }

    #[test]
    fn empty_round_mints_empty_block() {
        let mut net = SimNetwork::new(NetConfig::default()).unwrap();
        let out = net.commit().unwrap();
        assert_eq!(out.block.tx_count, 0);
        assert_eq!(net.chain().len(), 1);
        assert!(net.replicas_consistent());
    }

    #[test]
    fn clock_is_monotone() {
        let mut net = SimNetwork::new(NetConfig::default()).unwrap();
        let t0 = net.now();
        net.advance_to(t0 - 5);
        assert_eq!(net.now(), t0);
        assert_eq!(net.tick(), t0 + 1);
    }
}
