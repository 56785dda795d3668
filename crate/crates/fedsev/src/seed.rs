//! Deterministic seed derivation.
//!
//! Every randomized stage (fold shuffling, client partitioning, local
//! training, copula sampling) receives its own child seed mixed from the
//! master seed and a purpose tag, so changing one stage's consumption of
//! randomness never perturbs another.

/// SplitMix64 finalizer.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a child seed from a master seed and a purpose tag.
pub fn derive_seed(master: u64, tag: &str) -> u64 {
    let mut h = master;
    for &b in tag.as_bytes() {
        h = splitmix64(h ^ u64::from(b));
    }
    splitmix64(h)
}

/// Derive a child seed from a master seed, a purpose tag, and an index
/// (fold number, client id, round number).
pub fn derive_seed_indexed(master: u64, tag: &str, index: u64) -> u64 {
    splitmix64(derive_seed(master, tag) ^ splitmix64(index))
}
