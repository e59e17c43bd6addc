//! Counter-based random substreams.
//!
//! Every random draw in the crate comes from a ChaCha8 generator keyed by a
//! `(seed, stream)` pair. Work units (a dataset row, a supervector, a fold
//! shuffle) own one stream each, so results do not depend on which worker
//! runs a unit or in what order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Algorithm tag written into reports and manifests.
pub const RNG_ALGORITHM: &str = "chacha8-stream/rand_chacha-0.3";

/// Stream reserved for the train/test permutation.
pub const SPLIT_STREAM: u64 = 0x5350_4c49_5400_0000;
/// Stream reserved for the k-fold permutation of training rows.
pub const FOLD_STREAM: u64 = 0x464f_4c44_0000_0000;

/// Generator positioned at the start of stream `stream` under `seed`.
pub fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// SplitMix64 finalizer; used to derive independent child seeds.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Child seed for `tag` under `seed`.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    mix64(seed ^ mix64(tag))
}
