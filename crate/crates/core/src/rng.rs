//! Counter-keyed random streams.
//!
//! Every random draw in a simulation is addressed by `(master seed, path index,
//! lane, step index)`. A [`NoiseStream`] is a ChaCha8 stream selected by the
//! seed and `(path, lane)`, and [`NoiseStream::seek_step`] jumps to a fixed
//! block of words reserved for one step. Paths therefore never share state, and
//! a path's draws do not depend on how paths are scheduled over workers.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// Independent purposes drawing from the same path index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Lane {
    /// Ball noise driving walks and coupled walks.
    Walk = 0,
    /// Poisson clock for subordination.
    Poisson = 1,
    /// Brownian increments for one-dimensional comparison processes.
    Diffusion = 2,
    /// Resampling (bootstrap) draws.
    Bootstrap = 3,
}

const LANES: u64 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamKey {
    pub seed: u64,
    pub path: u64,
    pub lane: Lane,
}

impl StreamKey {
    pub fn new(seed: u64, path: u64, lane: Lane) -> Self {
        Self { seed, path, lane }
    }
}

/// A ChaCha8 stream with step addressing.
#[derive(Debug, Clone)]
pub struct NoiseStream {
    inner: ChaCha8Rng,
    words_per_step: u128,
}

impl NoiseStream {
    /// `draws_per_step` is the number of `f64` uniforms reserved for each step;
    /// every step starts at a fixed word offset whatever was consumed before.
    pub fn new(key: StreamKey, draws_per_step: usize) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(key.seed);
        inner.set_stream(key.path.wrapping_mul(LANES).wrapping_add(key.lane as u64));
        Self {
            inner,
            words_per_step: 2 * draws_per_step.max(1) as u128,
        }
    }

    /// Stream for sequential draws with no step structure.
    pub fn sequential(key: StreamKey) -> Self {
        Self::new(key, 1)
    }

    pub fn seek_step(&mut self, step: u64) {
        let pos = step as u128 * self.words_per_step;
        if self.inner.get_word_pos() != pos {
            self.inner.set_word_pos(pos);
        }
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on `(0, 1]`.
    pub fn uniform_open0(&mut self) -> f64 {
        1.0 - self.uniform()
    }

    /// A pair of independent standard normals (Box–Muller, two uniforms).
    pub fn normal_pair(&mut self) -> (f64, f64) {
        let u1 = self.uniform_open0();
        let u2 = self.uniform();
        let r = libm::sqrt(-2.0 * libm::log(u1));
        let (s, c) = libm::sincos(core::f64::consts::TAU * u2);
        (r * c, r * s)
    }

    pub fn normal(&mut self) -> f64 {
        self.normal_pair().0
    }

    /// Exponential with the given rate.
    pub fn exponential(&mut self, rate: f64) -> f64 {
        -libm::log(self.uniform_open0()) / rate
    }

    /// Uniform index in `0..n`.
    pub fn index(&mut self, n: usize) -> usize {
        ((self.uniform() * n as f64) as usize).min(n.saturating_sub(1))
    }
}

/// Uniforms consumed by one ball sample in dimension `m`.
pub fn ball_draws(m: usize) -> usize {
    2 * m.div_ceil(2) + 1
}
