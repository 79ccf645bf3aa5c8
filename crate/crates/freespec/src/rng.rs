use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Deterministic generator used by every randomized routine.
pub fn seeded(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent child stream derived from a parent seed and a label.
pub fn derive(seed: u64, label: u64) -> Rng {
    seeded(seed ^ label.wrapping_mul(0x9E37_79B9_7F4A_7C15).rotate_left(17))
}
