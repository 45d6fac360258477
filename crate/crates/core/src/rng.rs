//! Deterministic sampling primitives for the Monte Carlo evaluator.
//!
//! Everything is seeded explicitly and the u64 -> f64 conversion is spelled
//! out, so results are bit-reproducible across platforms and releases.

use rand_chacha::ChaCha12Rng;
use rand_core::{RngCore, SeedableRng};

use crate::math;

pub fn rng_from_seed(seed: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(seed)
}

/// Uniform draw in [0, 1) with 53-bit resolution.
#[inline]
pub fn next_f64(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Exponential draw with the given mean, via inversion. Uses ln(1-u) with
/// u in [0, 1), so the argument never hits zero.
#[inline]
pub fn next_exponential(rng: &mut impl RngCore, mean: f64) -> f64 {
    -mean * math::ln_1p(-next_f64(rng))
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E3779B97F4A7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Decorrelated substream seed for stream `index` under `base`. Used to give
/// each sampled position its own fading stream, so designs evaluated on the
/// same base seed see identical channel draws.
pub fn derive_seed(base: u64, index: u64) -> u64 {
    splitmix(base ^ splitmix(index))
}
