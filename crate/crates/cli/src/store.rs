//! The on-disk datadir: config, lock, append-only chain logs, chunk files
//! and manifests. All network state is rebuilt from these on startup.

use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tunechain_core::canonical::{from_canonical_str, to_canonical_string};
use tunechain_core::chain::{Chain, SideChain};
use tunechain_core::chunkstore::{Chunk, FileManifest};
use tunechain_core::netsim::{NetConfig, NetError, SimNetwork};
use tunechain_core::Hash;

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("datadir {0} is in use by another process")]
    Locked(PathBuf),
    #[error("--{flag} {given} conflicts with the datadir's stored value {stored}")]
    ConfigConflict { flag: &'static str, given: u64, stored: u64 },
    #[error("invalid configuration: {0}")]
    BadConfig(String),
    #[error("corrupt datadir: {0}")]
    Corrupt(String),
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |source| StoreError::Io { path: path.to_path_buf(), source }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub seed: u64,
    pub price_cents: u64,
    pub nodes: u64,
}

impl Default for Config {
    fn default() -> Self {
        let d = NetConfig::default();
        Config { seed: d.seed, price_cents: d.price_cents, nodes: d.nodes as u64 }
    }
}

/// Flags given on the command line; `None` means "not given".
#[derive(Debug, Clone, Copy, Default)]
pub struct ConfigFlags {
    pub seed: Option<u64>,
    pub price_cents: Option<u64>,
    pub nodes: Option<u64>,
}

impl ConfigFlags {
    /// The stored config if there is one, after checking the flags agree
    /// with it; otherwise the flags over the defaults.
    fn resolve(self, stored: Option<Config>) -> Result<Config, StoreError> {
        let Some(stored) = stored else {
            let d = Config::default();
            return Ok(Config {
                seed: self.seed.unwrap_or(d.seed),
                price_cents: self.price_cents.unwrap_or(d.price_cents),
                nodes: self.nodes.unwrap_or(d.nodes),
            });
        };
        for (flag, given, have) in [
            ("seed", self.seed, stored.seed),
            ("price-cents", self.price_cents, stored.price_cents),
            ("nodes", self.nodes, stored.nodes),
        ] {
            if let Some(given) = given.filter(|g| *g != have) {
                return Err(StoreError::ConfigConflict { flag, given, stored: have });
            }
        }
        Ok(stored)
    }
}

pub struct Datadir {
    root: PathBuf,
    pub config: Config,
    _lock: File,
    chain_len: usize,
    side_len: usize,
}

impl Datadir {
    /// Opens (creating if needed) and locks `root`.
    pub fn open(root: &Path, flags: ConfigFlags) -> Result<Datadir, StoreError> {
        fs::create_dir_all(root.join("chunks")).map_err(io(root))?;
        fs::create_dir_all(root.join("manifests")).map_err(io(root))?;
        let lock_path = root.join("lock");
        let lock =
            OpenOptions::new().create(true).truncate(false).write(true).open(&lock_path).map_err(io(&lock_path))?;
        match lock.try_lock() {
            Ok(()) => {}
            Err(fs::TryLockError::WouldBlock) => return Err(StoreError::Locked(root.to_path_buf())),
            Err(fs::TryLockError::Error(e)) => return Err(io(&lock_path)(e)),
        }

        let cfg_path = root.join("config.json");
        let stored = match fs::read_to_string(&cfg_path) {
            Ok(text) => Some(
                from_canonical_str::<Config>(text.trim_end())
                    .map_err(|e| StoreError::Corrupt(format!("config.json: {e}")))?,
            ),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => None,
            Err(e) => return Err(io(&cfg_path)(e)),
        };
        let config = flags.resolve(stored)?;
        if config.nodes == 0 {
            return Err(StoreError::BadConfig("--nodes must be at least 1".into()));
        }
        if stored.is_none() {
            write_atomic(&cfg_path, format!("{}\n", to_canonical_string(&config)).as_bytes())?;
        }
        Ok(Datadir { root: root.to_path_buf(), config, _lock: lock, chain_len: 0, side_len: 0 })
    }

    pub fn net_config(&self) -> NetConfig {
        NetConfig {
            nodes: self.config.nodes as usize,
            seed: self.config.seed,
            price_cents: self.config.price_cents,
            ..NetConfig::default()
        }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    fn read_log(&self, name: &str) -> Result<String, StoreError> {
        let p = self.path(name);
        let bytes = match fs::read(&p) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(String::new()),
            Err(e) => return Err(io(&p)(e)),
        };
        String::from_utf8(bytes).map_err(|e| {
            let at = e.utf8_error().valid_up_to();
            let height = e.as_bytes()[..at].iter().filter(|&&b| b == b'\n').count();
            StoreError::Corrupt(format!("{name}: block {height} is not valid UTF-8"))
        })
    }

    /// Replays both logs through full validation and re-places every stored
    /// file on its DHT holders.
    pub fn load(&mut self) -> Result<SimNetwork, StoreError> {
        let chain = Chain::from_log(&self.read_log("chain.log")?)
            .map_err(|e| StoreError::Corrupt(format!("chain.log: {e}")))?;
        let side = SideChain::from_log(&self.read_log("sidechain.log")?)
            .map_err(|e| StoreError::Corrupt(format!("sidechain.log: {e}")))?;
        let mut net = SimNetwork::restore(self.net_config(), &chain, &side).map_err(|e| match e {
            NetError::InvalidConfig(m) => StoreError::BadConfig(m),
            other => StoreError::Corrupt(format!("chain replay: {other}")),
        })?;
        self.chain_len = chain.len();
        self.side_len = side.len();

        let roots: Vec<Hash> = net.ledger().contract.file_mapping.keys().copied().collect();
        for root in roots {
            let p = self.path(&format!("manifests/{root}.json"));
            let text = match fs::read_to_string(&p) {
                Ok(t) => t,
                // the file stays listed; downloads report it unavailable
                Err(e) if e.kind() == std::io::ErrorKind::NotFound => continue,
                Err(e) => return Err(io(&p)(e)),
            };
            let manifest: FileManifest = from_canonical_str(text.trim_end())
                .map_err(|e| StoreError::Corrupt(format!("{}: {e}", p.display())))?;
            if manifest.root != root {
                return Err(StoreError::Corrupt(format!("{} holds manifest {}", p.display(), manifest.root)));
            }
            for h in &manifest.chunk_hashes {
                let cp = self.path(&format!("chunks/{h}"));
                match fs::read(&cp) {
                    Ok(bytes) => {
                        if let Ok(chunk) = Chunk::new(bytes) {
                            net.place_stored_chunk(*h, chunk);
                        }
                    }
                    Err(e) if e.kind() == std::io::ErrorKind::NotFound => {}
                    Err(e) => return Err(io(&cp)(e)),
                }
            }
            net.place_manifest(&manifest);
        }
        net.settle_clock();
        Ok(net)
    }

    /// Writes a file's chunks and manifest. Must happen before the block
    /// that registers it is appended.
    pub fn save_file(&self, manifest: &FileManifest, chunks: &[Chunk]) -> Result<(), StoreError> {
        for c in chunks {
            let p = self.path(&format!("chunks/{}", c.hash()));
            if !p.exists() {
                write_atomic(&p, c.data())?;
            }
        }
        let p = self.path(&format!("manifests/{}.json", manifest.root));
        write_atomic(&p, format!("{}\n", to_canonical_string(manifest)).as_bytes())
    }

    /// Appends blocks the network gained since the last load or sync.
    pub fn sync(&mut self, net: &SimNetwork) -> Result<(), StoreError> {
        let parent = &net.chain().blocks()[self.chain_len..];
        append_lines(&self.path("chain.log"), parent.iter().map(|b| b.to_canonical_json()))?;
        self.chain_len += parent.len();
        let side = &net.side_chain().blocks()[self.side_len..];
        append_lines(&self.path("sidechain.log"), side.iter().map(|b| b.to_canonical_json()))?;
        self.side_len += side.len();
        Ok(())
    }
}

fn append_lines(path: &Path, lines: impl Iterator<Item = String>) -> Result<(), StoreError> {
    let mut buf = String::new();
    for l in lines {
        buf.push_str(&l);
        buf.push('\n');
    }
    if buf.is_empty() {
        return Ok(());
    }
    let mut f = OpenOptions::new().create(true).append(true).open(path).map_err(io(path))?;
    f.write_all(buf.as_bytes()).map_err(io(path))
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), StoreError> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes).map_err(io(&tmp))?;
    fs::rename(&tmp, path).map_err(io(path))
}
