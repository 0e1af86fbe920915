//! Reproducible random streams keyed by `(seed, label)`.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

/// A counter-based generator bound to one logical stream.
///
/// Streams with the same seed but different labels are independent, so the
/// samples drawn for one tree node do not depend on how many draws another
/// node made before it.
#[derive(Clone, Debug)]
pub struct RngStream {
    rng: ChaCha20Rng,
}

impl RngStream {
    pub fn new(seed: u64, label: &[u64]) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(fnv1a(label));
        Self { rng }
    }

    /// Derive a child stream; the parent is left untouched.
    pub fn split(&self, label: &[u64]) -> Self {
        let mut rng = self.rng.clone();
        rng.set_stream(fnv1a(&[&[self.rng.get_stream()], label].concat()));
        rng.set_word_pos(0);
        Self { rng }
    }

    pub fn rng(&mut self) -> &mut ChaCha20Rng {
        &mut self.rng
    }
}

/// Label for a string tag, stable across platforms.
pub fn tag(name: &str) -> u64 {
    let words: Vec<u64> = name.bytes().map(u64::from).collect();
    fnv1a(&words)
}

fn fnv1a(words: &[u64]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for w in words {
        for b in w.to_le_bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    h
}
