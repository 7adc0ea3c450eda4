//! Portable seeded generator.
//!
//! The algorithm is fixed so that other implementations can regenerate the
//! same synthetic clips and weight initialisations bit for bit:
//!
//! 1. State initialisation: one SplitMix64 step applied to the seed,
//!    `z = seed + 0x9E3779B97F4A7C15; z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9;
//!    z = (z ^ (z >> 27)) * 0x94D049BB133111EB; state = z ^ (z >> 31)`,
//!    with `state = 0x9E3779B97F4A7C15` substituted if the result is zero.
//! 2. Each draw is xorshift64*: `s ^= s >> 12; s ^= s << 25; s ^= s >> 27;
//!    out = s * 0x2545F4914F6CDD1D` (all arithmetic wrapping mod 2⁶⁴).
//! 3. Uniform floats in `[0, 1)` use the top 53 bits: `(out >> 11) * 2⁻⁵³`.

#[derive(Clone, Debug)]
pub struct XorShift64 {
    state: u64,
}

impl XorShift64 {
    pub fn new(seed: u64) -> Self {
        let mut z = seed.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        let state = z ^ (z >> 31);
        Self { state: if state == 0 { 0x9E37_79B9_7F4A_7C15 } else { state } }
    }

    pub fn next_u64(&mut self) -> u64 {
        let mut s = self.state;
        s ^= s >> 12;
        s ^= s << 25;
        s ^= s >> 27;
        self.state = s;
        s.wrapping_mul(0x2545_F491_4F6C_DD1D)
    }

    /// Uniform in `[0, 1)`.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }
}
