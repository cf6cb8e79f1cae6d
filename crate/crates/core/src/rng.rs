//! Reproducible per-path random streams.
//!
//! Every Monte Carlo path draws from its own generator, derived from
//! `(master_seed, path_index)` through SplitMix64. Streams are independent of
//! worker count and scheduling, so ensembles reproduce bit-identically in
//! serial and parallel runs alike.

use rand_pcg::Pcg64;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Generator for path `path_index` under `master_seed`.
pub fn path_stream(master_seed: u64, path_index: u64) -> Pcg64 {
    let mut s = master_seed ^ path_index.wrapping_mul(0xa076_1d64_78bd_642f);
    let hi = splitmix64(&mut s) as u128;
    let lo = splitmix64(&mut s) as u128;
    let shi = splitmix64(&mut s) as u128;
    let slo = splitmix64(&mut s) as u128;
    Pcg64::new((hi << 64) | lo, (shi << 64) | slo)
}
