//! Seeded randomness.
//!
//! Every instance owns one [`InstanceRng`]: ChaCha with 8 rounds, seeded
//! from a 64-bit seed through `SeedableRng::seed_from_u64`. The stream is
//! platform independent, so a `(config, seed)` pair always replays the same
//! draws. Draws happen in a fixed order: depot, cluster centres, customer
//! coordinates, station perturbations and top-ups, demands, service times,
//! then (optionally) window starts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type InstanceRng = ChaCha8Rng;

pub fn instance_rng(seed: u64) -> InstanceRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform draw in `[lo, hi)`; returns `lo` when the interval is empty.
#[inline]
pub fn uniform<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}

/// Seed of the `attempt`-th instance in a stream starting at `base`.
#[inline]
pub fn stream_seed(base: u64, attempt: u64) -> u64 {
    base.wrapping_add(attempt)
}
