//! Per-stage seed derivation from one base seed.

/// SplitMix64 finalizer applied to `base + (stage + 1)·γ`.
pub fn derive(base: u64, stage: u64) -> u64 {
    let mut z = base.wrapping_add(stage.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
