//! Counter-based random streams.
//!
//! Every simulated combat draws from its own ChaCha stream keyed by
//! `(master seed, cell, trial)`, so results do not depend on the order or
//! thread in which trials run.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type CombatRng = ChaCha8Rng;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Stream for trial `trial` of cell `cell` under `master_seed`.
pub fn stream(master_seed: u64, cell: u64, trial: u64) -> CombatRng {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(master_seed ^ splitmix64(cell)));
    rng.set_stream(trial);
    rng
}

/// Stream for a single trial outside any sweep.
pub fn trial_stream(master_seed: u64, trial: u64) -> CombatRng {
    stream(master_seed, 0, trial)
}
