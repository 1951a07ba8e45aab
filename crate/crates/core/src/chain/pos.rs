//! Stake-weighted validator election.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::address::Address;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Validator {
    pub node_id: Address,
    pub stake: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ElectionError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

/// Picks one validator with probability stake / total stake.
pub fn select_validator<R: Rng + ?Sized>(validators: &[Validator], rng: &mut R) -> Result<Address, ElectionError> {
    if validators.is_empty() {
        return Err(ElectionError::InvalidInput("no validators".into()));
    }
    if let Some(v) = validators.iter().find(|v| v.stake == 0) {
        return Err(ElectionError::InvalidInput(format!("validator {} has zero stake", v.node_id)));
    }
    let total = validators
        .iter()
        .try_fold(0u64, |acc, v| acc.checked_add(v.stake))
        .ok_or_else(|| ElectionError::InvalidInput("total stake overflows".into()))?;

    let mut ticket = rng.gen_range(0..total);
    for v in validators {
        if ticket < v.stake {
            return Ok(v.node_id);
        }
        ticket -= v.stake;
    }
    unreachable!("ticket is below the total stake")
}

/// The election randomness for one block height: a ChaCha20 stream keyed by
/// the network seed, with the height as stream id. Independent of how many
/// rounds ran before, so a restarted network draws the same validators.
pub fn election_rng(seed: u64, height: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(height);
    rng
}
