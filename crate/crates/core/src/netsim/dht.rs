//! XOR-metric lookup of chunk holders.

use crate::address::Address;
use crate::hash::Hash;

/// A 160-bit XOR distance; ordering is numeric (big-endian).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Distance(pub [u8; 20]);

impl Distance {
    pub const ZERO: Distance = Distance([0; 20]);
}

pub fn xor_distance(a: &Address, b: &Address) -> Distance {
    let mut out = [0u8; 20];
    for (o, (x, y)) in out.iter_mut().zip(a.0.iter().zip(b.0.iter())) {
        *o = x ^ y;
    }
    Distance(out)
}

/// The DHT key of a chunk: the first 20 bytes of its hash.
pub fn chunk_key(hash: &Hash) -> Address {
    Address::from_prefix(hash.as_bytes())
}

/// All `nodes`, nearest to `key` first; ties fall back to node id order.
pub fn nearest<'a, I>(nodes: I, key: &Address) -> Vec<Address>
where
    I: IntoIterator<Item = &'a Address>,
{
    let mut ids: Vec<Address> = nodes.into_iter().copied().collect();
    ids.sort_by(|a, b| xor_distance(a, key).cmp(&xor_distance(b, key)).then(a.cmp(b)));
    ids
}
