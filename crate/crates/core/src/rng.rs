//! Deterministic pseudo-random streams.
//!
//! All stochastic behavior in this crate flows through [`SplitMix64`] so that
//! every draw is reproducible bit-for-bit from a 64-bit seed, independent of
//! platform or thread count. The generator is the splitmix64 finalizer:
//!
//! ```text
//! state += 0x9E3779B97F4A7C15
//! z = state
//! z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//! z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//! output = z ^ (z >> 31)
//! ```
//!
//! Substreams for noise generation are derived with [`substream`]: the base
//! seed is combined with a pattern id and realization index through
//! [`mix64`], so distinct (pattern, realization) pairs get independent
//! streams that can be generated in any order or in parallel.
//!
//! Uniform doubles map a draw `x` to `(x >> 11) * 2⁻⁵³ ∈ [0, 1)`; standard
//! normals come from the Box–Muller transform applied to `(x >> 11 + 1) * 2⁻⁵³`
//! (open interval) and a second uniform, with the paired value cached.

/// splitmix64 finalizer, also used as the seed-mixing hash.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// splitmix64 stream.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
    cached_normal: Option<f64>,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed, cached_normal: None }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E3779B97F4A7C15);
        mix64(self.state)
    }

    /// Uniform on `[0, 1)`.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on `(0, 1]`, safe to pass to `ln`.
    #[inline]
    fn uniform_open(&mut self) -> f64 {
        ((self.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal via Box–Muller, consuming two uniforms per pair.
    pub fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.cached_normal.take() {
            return z;
        }
        let u1 = self.uniform_open();
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.cached_normal = Some(r * theta.sin());
        r * theta.cos()
    }
}

/// Independent substream for `(base_seed, stream_id, index)`.
///
/// `seed' = mix64(mix64(base ^ (id · C1)) ^ (index · C2))` with the golden
/// ratio constants `C1 = 0x9E3779B97F4A7C15`, `C2 = 0xBF58476D1CE4E5B9`.
pub fn substream(base_seed: u64, stream_id: u64, index: u64) -> SplitMix64 {
    let a = mix64(base_seed ^ stream_id.wrapping_mul(0x9E3779B97F4A7C15));
    SplitMix64::new(mix64(a ^ index.wrapping_mul(0xBF58476D1CE4E5B9)))
}
