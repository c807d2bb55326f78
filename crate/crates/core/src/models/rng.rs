//! Counter-addressed SplitMix64 streams.
//!
//! Every random draw is addressed by `(seed, stream, index)`: input column
//! `j` of sample row `r` uses stream `j` and index `r`. A cell generator is
//! a SplitMix64 sequence started from a hash of that address, so any row
//! range can be regenerated independently and the matrices do not depend
//! on batch sizes or thread counts.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;
const STREAM_SALT: u64 = 0x632B_E59B_D9B4_E019;
const INDEX_SALT: u64 = 0xD1B5_4A32_D192_ED03;
const UNIT: f64 = 1.0 / (1u64 << 53) as f64;

#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for replicate `index` of a study seeded with `seed`.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    mix64(seed ^ mix64(index.wrapping_add(STREAM_SALT)))
}

#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    /// Generator for one `(seed, stream, index)` cell.
    #[inline]
    pub fn for_cell(seed: u64, stream: u64, index: u64) -> Self {
        StreamKey::new(seed, stream).cell(index)
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN);
        mix64(self.state)
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * UNIT
    }

    /// Uniform on the open interval `(0, 1)`.
    #[inline]
    pub fn next_open01(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * UNIT
    }

    /// Standard normal by the Box-Muller cosine branch (two uniforms, no rejection).
    #[inline]
    pub fn next_normal(&mut self) -> f64 {
        let u1 = self.next_open01();
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }
}

/// Precomputed hash of `(seed, stream)`.
#[derive(Debug, Clone, Copy)]
pub struct StreamKey(u64);

impl StreamKey {
    pub fn new(seed: u64, stream: u64) -> Self {
        StreamKey(mix64(seed.wrapping_add(mix64(stream ^ STREAM_SALT))))
    }

    #[inline]
    pub fn cell(self, index: u64) -> SplitMix64 {
        SplitMix64::new(mix64(self.0 ^ index.wrapping_mul(GOLDEN).wrapping_add(INDEX_SALT)))
    }
}
