use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Result};

/// Random binary sequence of `±amplitude` whose sign flips with probability
/// `switch_prob` at each sample.
pub fn rbs(length: usize, amplitude: f64, switch_prob: f64, seed: u64) -> Result<Vec<f64>> {
    if !(amplitude > 0.0 && amplitude.is_finite()) {
        return invalid("RBS amplitude must be positive");
    }
    if !(switch_prob > 0.0 && switch_prob <= 0.5) {
        return invalid("RBS switch probability must lie in (0, 0.5]");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    Ok((0..length)
        .map(|_| {
            if rng.random_bool(switch_prob) {
                sign = -sign;
            }
            sign * amplitude
        })
        .collect())
}
