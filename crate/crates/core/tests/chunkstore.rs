use proptest::prelude::*;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};
use tunechain_core::chunkstore::{
    chunk_file, chunk_hash, merkle_root, reassemble, Chunk, ChunkStore, FileManifest, FileMeta,
};
use tunechain_core::Hash;

fn reference_sha(data: &[u8]) -> [u8; 32] {
    Sha256::digest(data).into()
}

fn meta() -> FileMeta {
    FileMeta { author: "x".into(), title: "y".into(), date: 1 }
}

#[test]
fn chunk_hash_matches_reference() {
    let c = Chunk::new(b"abc".to_vec()).unwrap();
    assert_eq!(chunk_hash(&c).0, reference_sha(b"abc"));
    let d = Chunk::new(b"abd".to_vec()).unwrap();
    assert_ne!(chunk_hash(&c), chunk_hash(&d));
}

#[test]
fn two_leaf_root_is_double_sha_of_concatenation() {
    let h1 = Hash(reference_sha(b"left"));
    let h2 = Hash(reference_sha(b"right"));
    let mut cat = h1.0.to_vec();
    cat.extend_from_slice(&h2.0);
    assert_eq!(merkle_root(&[h1, h2]).unwrap().0, reference_sha(&reference_sha(&cat)));
}

#[test]
fn single_leaf_is_its_own_root() {
    let h = Hash(reference_sha(b"only"));
    assert_eq!(merkle_root(&[h]).unwrap(), h);
}

#[test]
fn one_mib_roundtrip() {
    let mut bytes = vec![0u8; 1 << 20];
    ChaCha8Rng::seed_from_u64(3).fill_bytes(&mut bytes);
    let chunks = chunk_file(&bytes).unwrap();
    assert_eq!(chunks.len(), 4);
    assert_eq!(chunks.iter().flat_map(|c| c.data().to_vec()).collect::<Vec<_>>(), bytes);

    let (manifest, chunks) = FileManifest::build(&bytes, meta()).unwrap();
    let mut store = ChunkStore::new();
    for c in chunks {
        store.put(c);
    }
    assert_eq!(reassemble(&manifest, |_, h| store.get(h)).unwrap(), bytes);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn reassembly_roundtrips(bytes in prop::collection::vec(any::<u8>(), 1..700_000)) {
        let (manifest, chunks) = FileManifest::build(&bytes, meta()).unwrap();
        prop_assert_eq!(chunks.iter().map(|c| c.len() as u64).sum::<u64>(), manifest.file_size);
        let mut store = ChunkStore::new();
        for c in chunks {
            store.put(c);
        }
        prop_assert_eq!(reassemble(&manifest, |_, h| store.get(h)).unwrap(), bytes);
    }

    #[test]
    fn roots_address_content(bytes in prop::collection::vec(any::<u8>(), 1..4096), pos in any::<prop::sample::Index>()) {
        let (a, _) = FileManifest::build(&bytes, meta()).unwrap();
        let (b, _) = FileManifest::build(&bytes.clone(), meta()).unwrap();
        prop_assert_eq!(a.root, b.root);
        let mut changed = bytes.clone();
        changed[pos.index(bytes.len())] ^= 0x80;
        let (c, _) = FileManifest::build(&changed, meta()).unwrap();
        prop_assert_ne!(a.root, c.root);
    }

    #[test]
    fn odd_levels_duplicate_last_leaf(n in 2usize..9) {
        let odd = 2 * n - 1;
        let leaves: Vec<Hash> = (0..odd).map(|i| Hash(reference_sha(&[i as u8]))).collect();
        let mut padded = leaves.clone();
        padded.push(*leaves.last().unwrap());
        prop_assert_eq!(merkle_root(&leaves).unwrap(), merkle_root(&padded).unwrap());
    }
}
