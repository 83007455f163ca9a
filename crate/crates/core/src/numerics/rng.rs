//! Seeded pseudo-random generator used everywhere randomness appears.
//!
//! The core generator is xoshiro256++ with its state expanded from a
//! 64-bit seed by SplitMix64. Both algorithms are fixed here, so a given
//! seed produces the same stream on every platform and build. No
//! wall-clock seeding exists anywhere in the crate.

/// Deterministic pseudo-random generator (xoshiro256++, SplitMix64 seeding).
#[derive(Debug, Clone)]
pub struct Rng {
    state: [u64; 4],
}

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(GOLDEN_GAMMA);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic tagged seed derivation; `Rng::child(seed, tag)` is
/// `Rng::new(derive_seed(seed, tag))`.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut sm = seed;
    let base = splitmix64(&mut sm);
    base ^ tag.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA).rotate_left(17)
}

impl Rng {
    /// Generator seeded from a 64-bit value.
    pub fn new(seed: u64) -> Self {
        let mut sm = seed;
        let state = [
            splitmix64(&mut sm),
            splitmix64(&mut sm),
            splitmix64(&mut sm),
            splitmix64(&mut sm),
        ];
        Rng { state }
    }

    /// Independent generator for a tagged substream (per tree, per
    /// restart, per detector). Children of distinct tags do not collide
    /// with each other or the parent stream.
    pub fn child(seed: u64, tag: u64) -> Self {
        Rng::new(derive_seed(seed, tag))
    }

    pub fn next_u64(&mut self) -> u64 {
        let s = &mut self.state;
        let result = s[0]
            .wrapping_add(s[3])
            .rotate_left(23)
            .wrapping_add(s[0]);
        let t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = s[3].rotate_left(45);
        result
    }

    /// Uniform draw in `[0, 1)` with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform draw in `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + self.next_f64() * (hi - lo)
    }

    /// Standard normal draw via Box-Muller. Consumes two uniforms per
    /// call; no value is cached, keeping the stream position predictable.
    pub fn normal(&mut self) -> f64 {
        let u1 = loop {
            let u = self.next_f64();
            if u > 0.0 {
                break u;
            }
        };
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }

    /// Uniform index in `[0, n)`. `n` must be positive.
    pub fn index(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        // Multiplicative range reduction; bias is below 2^-53 * n and
        // irrelevant at the sizes used here.
        let idx = (self.next_f64() * n as f64) as usize;
        idx.min(n - 1)
    }

    /// In-place Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.index(i + 1);
            items.swap(i, j);
        }
    }

    /// `k` distinct indices sampled uniformly from `[0, n)`, in draw order.
    pub fn sample_indices(&mut self, n: usize, k: usize) -> Vec<usize> {
        debug_assert!(k <= n);
        let mut pool: Vec<usize> = (0..n).collect();
        for i in 0..k {
            let j = i + self.index(n - i);
            pool.swap(i, j);
        }
        pool.truncate(k);
        pool
    }
}
