//! Deterministic seed derivation.
//!
//! Everything random in this crate flows from explicit `u64` seeds through
//! ChaCha8 generators. When one master seed has to fan out into many
//! independent streams (per model, per sweep value, per repeat), the
//! sub-seeds are derived by folding each index through the SplitMix64
//! finaliser - cheap, stateless, and documented here so results can be
//! reproduced outside this crate.

/// SplitMix64 finalisation step: a bijective mixer with good avalanche.
fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E3779B97F4A7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Derive an independent sub-seed from a master seed and up to three indices
/// (use 0 for unused positions). Each index is folded in sequentially, so
/// `derive_seed(s, a, b, c)` differs from any reordering of the indices.
pub fn derive_seed(master: u64, a: u64, b: u64, c: u64) -> u64 {
    let mut s = splitmix64(master);
    s = splitmix64(s ^ a);
    s = splitmix64(s ^ b);
    s = splitmix64(s ^ c);
    s
}
