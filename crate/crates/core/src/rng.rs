//! Reproducible per-trial random streams.
//!
//! Every trial owns an independent SplitMix64 stream whose seed is
//! `mix64(master ^ GOLDEN_GAMMA * (trial + 1))`. Normals come from the polar
//! Box-Muller method: two uniforms `u1, u2` are drawn in that order, mapped to
//! `v = 2u - 1`, and the pair is rejected unless `0 < s = v1^2 + v2^2 < 1`.
//! An accepted pair yields `v1 * f` first and caches `v2 * f` for the next
//! call, with `f = sqrt(-2 ln s / s)`. Uniforms use the top 53 bits of each
//! output word. The whole chain is integer arithmetic plus IEEE-754 `ln` and
//! `sqrt`, so streams are identical across platforms.

/// Weyl increment of SplitMix64 (the odd integer closest to 2^64 / phi).
pub const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// The SplitMix64 output finalizer (three xor-shift / multiply rounds).
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the stream that belongs to `trial` under `master`.
#[inline]
pub fn trial_seed(master: u64, trial: u64) -> u64 {
    mix64(master ^ GOLDEN_GAMMA.wrapping_mul(trial.wrapping_add(1)))
}

#[derive(Clone, Debug)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        mix64(self.state)
    }

    /// Uniform on `[0, 1)` with 53 bits of resolution.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

/// Standard normal stream (polar Box-Muller over [`SplitMix64`]).
#[derive(Clone, Debug)]
pub struct NormalStream {
    rng: SplitMix64,
    spare: Option<f64>,
}

impl NormalStream {
    pub fn from_seed(seed: u64) -> Self {
        NormalStream { rng: SplitMix64::new(seed), spare: None }
    }

    /// The stream owned by `trial` under `master`.
    pub fn for_trial(master: u64, trial: u64) -> Self {
        Self::from_seed(trial_seed(master, trial))
    }

    pub fn next_normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        loop {
            let v1 = 2.0 * self.rng.next_f64() - 1.0;
            let v2 = 2.0 * self.rng.next_f64() - 1.0;
            let s = v1 * v1 + v2 * v2;
            if s > 0.0 && s < 1.0 {
                let f = (-2.0 * s.ln() / s).sqrt();
                self.spare = Some(v2 * f);
                return v1 * f;
            }
        }
    }

    /// `N(0, sigma^2)` draw.
    #[inline]
    pub fn gaussian(&mut self, sigma: f64) -> f64 {
        sigma * self.next_normal()
    }

    pub fn fill_gaussian(&mut self, out: &mut [f64], sigma: f64) {
        for v in out {
            *v = self.gaussian(sigma);
        }
    }

    pub fn uniform(&mut self) -> f64 {
        self.rng.next_f64()
    }
}
