//! Counter-based Gaussian noise.
//!
//! Each `(seed, stream_id)` pair selects an independent ChaCha8 stream; the
//! `i`-th standard normal of a stream is the inverse normal CDF of its `i`-th
//! 64-bit output, so the value depends only on `(seed, stream_id, i)`.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc_inv;

use crate::model::TimeMesh;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NoiseSeed {
    pub seed: u64,
    pub stream_id: u64,
}

impl NoiseSeed {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }
}

/// Standard normal stream keyed by a [`NoiseSeed`].
#[derive(Debug, Clone)]
pub struct GaussianStream {
    rng: ChaCha8Rng,
}

impl GaussianStream {
    pub fn new(seed: NoiseSeed) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.seed);
        rng.set_stream(seed.stream_id);
        Self { rng }
    }

    /// Stream positioned at draw `index`.
    pub fn at(seed: NoiseSeed, index: u64) -> Self {
        let mut s = Self::new(seed);
        // one 64-bit draw spans two 32-bit ChaCha words
        s.rng.set_word_pos(2 * index as u128);
        s
    }

    /// Uniform on the open interval `(0, 1)`.
    pub fn next_uniform(&mut self) -> f64 {
        ((self.rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    pub fn next_standard(&mut self) -> f64 {
        inverse_normal_cdf(self.next_uniform())
    }
}

/// `Phi^{-1}(u)` for `u` in `(0, 1)`.
pub fn inverse_normal_cdf(u: f64) -> f64 {
    -std::f64::consts::SQRT_2 * erfc_inv(2.0 * u)
}

/// Brownian increments over the forward steps of a mesh, `N(0, step * I)` each.
#[derive(Debug, Clone, PartialEq)]
pub struct BrownianIncrements {
    mesh: TimeMesh,
    dim: usize,
    increments: Vec<f64>,
}

impl BrownianIncrements {
    pub fn mesh(&self) -> &TimeMesh {
        &self.mesh
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of increments (`n_forward`).
    pub fn len(&self) -> usize {
        self.mesh.n_forward()
    }

    pub fn is_empty(&self) -> bool {
        self.increments.is_empty()
    }

    /// Increment over `[t_k, t_{k+1}]`.
    pub fn get(&self, k: usize) -> &[f64] {
        &self.increments[k * self.dim..(k + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.increments
    }
}

/// Deterministic in `(mesh, dim, seed)`: coordinate `i` of step `k` is draw `k * dim + i`.
pub fn brownian_increments(mesh: &TimeMesh, dim: usize, seed: NoiseSeed) -> BrownianIncrements {
    let scale = mesh.step().sqrt();
    let mut stream = GaussianStream::new(seed);
    let increments = (0..mesh.n_forward() * dim)
        .map(|_| scale * stream.next_standard())
        .collect();
    BrownianIncrements {
        mesh: *mesh,
        dim,
        increments,
    }
}
