//! Counter-based random streams.
//!
//! Every simulated path owns a ChaCha8 stream addressed by a 256-bit key built
//! from `(seed, domain, block)` plus a 64-bit stream id. Results therefore do not
//! depend on which worker simulates which path, or in what order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Key domains, so that different consumers of the same seed never share streams.
pub(crate) mod domain {
    pub const CHAIN: u64 = 0x4348_4149_4e00_0001;
    pub const MC: u64 = 0x4d43_5f50_4154_4801;
    pub const MC_NESTED: u64 = 0x4d43_5f4e_4553_5401;
    pub const SWEEP: u64 = 0x5357_4545_5000_0001;
}

pub(crate) fn stream(seed: u64, domain: u64, block: u64, stream_id: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[0..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&domain.to_le_bytes());
    key[16..24].copy_from_slice(&block.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(stream_id);
    rng
}

/// SplitMix64 finalizer, used to derive child seeds (e.g. one per sweep cell).
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master
        .wrapping_add(domain::SWEEP)
        .wrapping_add(index.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
