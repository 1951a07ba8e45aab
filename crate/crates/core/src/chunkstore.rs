//! Content-addressed chunk storage and Merkle file manifests.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::hash::{double_sha256, sha256, Hash};

pub const CHUNK_SIZE: usize = 262_144;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ChunkError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("chunk {0} not found")]
    NotFound(Hash),
    #[error("integrity error{}: {reason}", index.map(|i| format!(" at chunk {i}")).unwrap_or_default())]
    Integrity { index: Option<usize>, reason: String },
}

/// Between 1 byte and 256 KiB of file content.
#[derive(Clone, PartialEq, Eq)]
pub struct Chunk(Vec<u8>);

impl Chunk {
    pub fn new(data: Vec<u8>) -> Result<Self, ChunkError> {
        if data.is_empty() {
            return Err(ChunkError::InvalidInput("chunk is empty".into()));
        }
        if data.len() > CHUNK_SIZE {
            return Err(ChunkError::InvalidInput(format!("chunk is {} bytes, limit is {CHUNK_SIZE}", data.len())));
        }
        Ok(Chunk(data))
    }

    pub fn data(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn hash(&self) -> Hash {
        chunk_hash(self)
    }

    pub fn into_inner(self) -> Vec<u8> {
        self.0
    }
}

impl std::fmt::Debug for Chunk {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Chunk({} bytes, {})", self.0.len(), self.hash())
    }
}

/// Fixed-size split; the last chunk holds the remainder.
pub fn chunk_file(bytes: &[u8]) -> Result<Vec<Chunk>, ChunkError> {
    if bytes.is_empty() {
        return Err(ChunkError::InvalidInput("file is empty".into()));
    }
    Ok(bytes.chunks(CHUNK_SIZE).map(|c| Chunk(c.to_vec())).collect())
}

pub fn chunk_hash(chunk: &Chunk) -> Hash {
    sha256(&chunk.0)
}

/// Binary Merkle root. Interior nodes are double-SHA256 of the two child
/// digests; an odd level repeats its last node; a single leaf is the root.
pub fn merkle_root(hashes: &[Hash]) -> Result<Hash, ChunkError> {
    if hashes.is_empty() {
        return Err(ChunkError::InvalidInput("merkle root of an empty list".into()));
    }
    let mut level = hashes.to_vec();
    while level.len() > 1 {
        if level.len() % 2 == 1 {
            level.push(*level.last().unwrap());
        }
        level = level
            .chunks_exact(2)
            .map(|pair| {
                let mut buf = [0u8; 64];
                buf[..32].copy_from_slice(pair[0].as_bytes());
                buf[32..].copy_from_slice(pair[1].as_bytes());
                double_sha256(&buf)
            })
            .collect();
    }
    Ok(level[0])
}

/// Descriptive fields attached to an upload.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileMeta {
    pub author: String,
    pub title: String,
    /// UTC seconds.
    pub date: u64,
}

impl FileMeta {
    /// SHA-256 of the canonical JSON encoding.
    pub fn meta_hash(&self) -> Hash {
        sha256(&crate::canonical::to_canonical_bytes(self))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileManifest {
    pub root: Hash,
    pub chunk_hashes: Vec<Hash>,
    pub file_size: u64,
    pub author: String,
    pub title: String,
    pub date: u64,
}

impl FileManifest {
    /// Chunks `bytes` and builds the manifest describing them.
    pub fn build(bytes: &[u8], meta: FileMeta) -> Result<(FileManifest, Vec<Chunk>), ChunkError> {
        let chunks = chunk_file(bytes)?;
        let chunk_hashes: Vec<Hash> = chunks.iter().map(chunk_hash).collect();
        let manifest = FileManifest {
            root: merkle_root(&chunk_hashes)?,
            chunk_hashes,
            file_size: bytes.len() as u64,
            author: meta.author,
            title: meta.title,
            date: meta.date,
        };
        Ok((manifest, chunks))
    }

    pub fn meta(&self) -> FileMeta {
        FileMeta { author: self.author.clone(), title: self.title.clone(), date: self.date }
    }

    /// Checks the root and the chunk count implied by the file size.
    pub fn validate(&self) -> Result<(), ChunkError> {
        if self.chunk_hashes.is_empty() || self.file_size == 0 {
            return Err(ChunkError::InvalidInput("manifest describes no data".into()));
        }
        let expected_chunks = (self.file_size as usize).div_ceil(CHUNK_SIZE);
        if expected_chunks != self.chunk_hashes.len() {
            return Err(ChunkError::InvalidInput(format!(
                "{} bytes need {expected_chunks} chunks, manifest lists {}",
                self.file_size,
                self.chunk_hashes.len()
            )));
        }
        if merkle_root(&self.chunk_hashes)? != self.root {
            return Err(ChunkError::Integrity { index: None, reason: "merkle root does not match chunk list".into() });
        }
        Ok(())
    }

    /// Expected byte length of chunk `index`.
    pub fn chunk_len(&self, index: usize) -> usize {
        let size = self.file_size as usize;
        if index + 1 == self.chunk_hashes.len() {
            size - index * CHUNK_SIZE
        } else {
            CHUNK_SIZE
        }
    }
}

/// Fetches every chunk in manifest order, checks each against its recorded
/// hash and the manifest root, and returns the file bytes.
pub fn reassemble<F>(manifest: &FileManifest, mut fetch: F) -> Result<Vec<u8>, ChunkError>
where
    F: FnMut(usize, &Hash) -> Result<Chunk, ChunkError>,
{
    manifest.validate()?;
    let mut out = Vec::with_capacity(manifest.file_size as usize);
    for (index, expected) in manifest.chunk_hashes.iter().enumerate() {
        let chunk = fetch(index, expected)?;
        if chunk_hash(&chunk) != *expected {
            return Err(ChunkError::Integrity { index: Some(index), reason: "chunk hash mismatch".into() });
        }
        out.extend_from_slice(chunk.data());
    }
    if out.len() as u64 != manifest.file_size {
        return Err(ChunkError::Integrity {
            index: None,
            reason: format!("reassembled {} bytes, manifest says {}", out.len(), manifest.file_size),
        });
    }
    Ok(out)
}

/// In-memory content-addressed store.
#[derive(Debug, Clone, Default)]
pub struct ChunkStore {
    chunks: BTreeMap<Hash, Chunk>,
}

impl ChunkStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Stores `chunk` under its hash. Re-putting identical bytes is a no-op.
    pub fn put(&mut self, chunk: Chunk) -> Hash {
        let h = chunk_hash(&chunk);
        self.chunks.entry(h).or_insert(chunk);
        h
    }

    pub fn get(&self, hash: &Hash) -> Result<Chunk, ChunkError> {
        self.chunks.get(hash).cloned().ok_or(ChunkError::NotFound(*hash))
    }

    pub fn contains(&self, hash: &Hash) -> bool {
        self.chunks.contains_key(hash)
    }

    pub fn remove(&mut self, hash: &Hash) -> Option<Chunk> {
        self.chunks.remove(hash)
    }

    /// Replaces stored bytes without rehashing. Only useful for fault injection.
    pub fn overwrite_unchecked(&mut self, hash: Hash, chunk: Chunk) {
        self.chunks.insert(hash, chunk);
    }

    pub fn len(&self) -> usize {
        self.chunks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chunks.is_empty()
    }

    pub fn hashes(&self) -> impl Iterator<Item = &Hash> {
        self.chunks.keys()
    }
}
