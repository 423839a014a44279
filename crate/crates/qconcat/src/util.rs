//! Small shared helpers: deterministic RNG derivation and text formatting.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 step. `state` advances by the golden-ratio increment and the
/// mixed output is returned. Stable across platforms and releases; the CSV
/// reproducibility guarantees depend on this exact function.
pub fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent ChaCha8 stream from a user seed and a stream index
/// (trial number, calibration tag, code seed, ...). Distinct stream indices
/// under one seed give unrelated streams, which is what makes simulation
/// results independent of how trials are divided among workers.
pub fn derived_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut state = seed ^ stream.wrapping_mul(0xA076_1D64_78BD_642F);
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

/// Formats a float with 17 significant digits, enough to reproduce the exact
/// f64 on parse. All floats crossing a text boundary go through this.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}
