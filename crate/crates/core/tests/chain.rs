use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};
use tunechain_core::chain::{
    block_hash, canonical_header_bytes, election_rng, select_validator, Chain, ParentBlockHeader, SideChain, Validator,
    ViolationTx, ViolationType,
};
use tunechain_core::tx::Transaction;
use tunechain_core::{Address, Hash};

fn reference_double_sha(data: &[u8]) -> [u8; 32] {
    Sha256::digest(Sha256::digest(data)).into()
}

fn sample_header() -> ParentBlockHeader {
    ParentBlockHeader {
        version: 1,
        prev_hash: Hash([0x11; 32]),
        merkle_root: Hash([0x22; 32]),
        timestamp: 1_582_300_000,
        target_difficulty: 0x1d00ffff,
        nonce: 42,
    }
}

#[test]
fn block_hash_is_double_sha_of_header_bytes() {
    let header = sample_header();
    let bytes = canonical_header_bytes(&header);
    assert_eq!(bytes.len(), 88);
    assert_eq!(block_hash(&header).0, reference_double_sha(&bytes));

    // hand-assembled layout
    let mut manual = Vec::new();
    manual.extend_from_slice(&1u32.to_be_bytes());
    manual.extend_from_slice(&[0x11; 32]);
    manual.extend_from_slice(&[0x22; 32]);
    manual.extend_from_slice(&1_582_300_000u64.to_be_bytes());
    manual.extend_from_slice(&0x1d00ffffu32.to_be_bytes());
    manual.extend_from_slice(&42u64.to_be_bytes());
    assert_eq!(bytes.to_vec(), manual);
}

#[test]
fn one_bit_changes_the_hash() {
    let header = sample_header();
    let mut other = header;
    other.nonce ^= 1;
    assert_ne!(block_hash(&header), block_hash(&other));
    assert_eq!(block_hash(&other).0, reference_double_sha(&canonical_header_bytes(&other)));
}

fn chain_of(n: u64) -> Chain {
    let mut chain = Chain::new();
    for h in 0..n {
        let txs = (0..3)
            .map(|i| Transaction::pay_and_download(Address([i as u8 + 1; 20]), Hash([h as u8; 32]), 137, h * 10 + i))
            .collect();
        chain.append_block(txs, Address([9; 20]), 1_000 + h);
    }
    chain
}

#[test]
fn appended_blocks_validate() {
    let chain = chain_of(10);
    assert_eq!(chain.validate_chain(), Ok(()));
    for w in chain.blocks().windows(2) {
        assert_eq!(w[1].header.prev_hash, block_hash(&w[0].header));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    /// Any single-bit flip in a block's header or transactions is reported at
    /// that height or the next one.
    #[test]
    fn tamper_is_always_detected(height in 0usize..10, field in 0usize..7, bit in 0u32..8, pick in any::<u64>()) {
        let mut chain = chain_of(10);
        let block = &mut chain.blocks_mut()[height];
        let mask = 1u8 << bit;
        match field {
            0 => block.header.version ^= (mask as u32) << (pick % 4 * 8),
            1 => block.header.prev_hash.0[(pick % 32) as usize] ^= mask,
            2 => block.header.merkle_root.0[(pick % 32) as usize] ^= mask,
            3 => block.header.timestamp ^= (mask as u64) << (pick % 8 * 8),
            4 => block.header.target_difficulty ^= (mask as u32) << (pick % 4 * 8),
            5 => block.header.nonce ^= (mask as u64) << (pick % 8 * 8),
            _ => {
                let tx = &mut block.transactions[(pick % 3) as usize];
                tx.caller.0[(pick % 20) as usize] ^= mask;
            }
        }
        let err = chain.validate_chain().unwrap_err();
        prop_assert!(err.height <= height + 1, "{err}");
    }
}

#[test]
fn stake_linear_selection() {
    let vals = [
        Validator { node_id: Address([1; 20]), stake: 1 },
        Validator { node_id: Address([2; 20]), stake: 1 },
        Validator { node_id: Address([3; 20]), stake: 2 },
    ];
    let mut rng = election_rng(2024, 0);
    let mut counts = [0u32; 3];
    let draws = 100_000;
    for _ in 0..draws {
        let id = select_validator(&vals, &mut rng).unwrap();
        counts[id.0[0] as usize - 1] += 1;
    }
    for (c, share) in counts.iter().zip([0.25, 0.25, 0.5]) {
        let freq = *c as f64 / draws as f64;
        assert!((freq - share).abs() <= 0.01, "{counts:?}");
    }
}

#[test]
fn selection_is_deterministic_for_a_generator_state() {
    let vals: Vec<Validator> = (1..=5).map(|i| Validator { node_id: Address([i; 20]), stake: i as u64 }).collect();
    let mut a = ChaCha8Rng::seed_from_u64(1);
    let mut b = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..1000 {
        assert_eq!(select_validator(&vals, &mut a).unwrap(), select_validator(&vals, &mut b).unwrap());
    }
}

#[test]
fn side_block_signature_and_root() {
    let secret = [5u8; 32];
    let nid = Address([0x0a; 20]);
    let v = ViolationTx::signed(77, Address([0x0b; 20]), ViolationType::DuplicateUpload, nid, &secret);

    let mut keyed = nid.0.to_vec();
    keyed.extend_from_slice(&v.unsigned_bytes());
    keyed.extend_from_slice(&secret);
    assert_eq!(v.ns.0, <[u8; 32]>::from(Sha256::digest(&keyed)));

    let parent = Hash([0xcd; 32]);
    let mut side = SideChain::new();
    let block = side.record_violation(v, parent, 80).clone();
    assert_eq!(block.id, "cdcdcdcd-0");
    assert_eq!(block.violations[0].vt, ViolationType::DuplicateUpload);
    assert_eq!(block.tx_counter, 1);
    assert_eq!(side.validate(), Ok(()));
}
