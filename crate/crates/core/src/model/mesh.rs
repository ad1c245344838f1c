use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const ALIGN_TOL: f64 = 1e-9;

/// Uniform grid on `[-tau, horizon]` whose step divides both `tau` and `horizon`.
///
/// Global index `j` runs over `0..=n_history + n_forward` and sits at time
/// `(j - n_history) * step`; forward index `k` is `j - n_history`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeMesh {
    tau: f64,
    horizon: f64,
    step: f64,
    n_history: usize,
    n_forward: usize,
}

impl TimeMesh {
    pub fn new(tau: f64, horizon: f64, steps_per_tau: usize) -> Result<Self> {
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(Error::NonPositiveInput("tau"));
        }
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::NonPositiveInput("horizon"));
        }
        if steps_per_tau == 0 {
            return Err(Error::NonPositiveInput("steps_per_tau"));
        }
        let step = tau / steps_per_tau as f64;
        let n_forward = aligned_ratio(horizon, step)
            .ok_or(Error::NonAlignedHorizon { horizon, step })?;
        Ok(Self {
            tau,
            horizon,
            step,
            n_history: steps_per_tau,
            n_forward,
        })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// Number of steps covering the delay window `[-tau, 0]`.
    pub fn n_history(&self) -> usize {
        self.n_history
    }

    /// Number of steps covering `[0, horizon]`.
    pub fn n_forward(&self) -> usize {
        self.n_forward
    }

    /// Total number of mesh points on `[-tau, horizon]`.
    pub fn len(&self) -> usize {
        self.n_history + self.n_forward + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Slots in a segment window (`n_history + 1`).
    pub fn window_len(&self) -> usize {
        self.n_history + 1
    }

    /// Time of forward index `k`.
    pub fn forward_time(&self, k: usize) -> f64 {
        k as f64 * self.step
    }

    /// Time of global index `j`.
    pub fn time(&self, j: usize) -> f64 {
        (j as f64 - self.n_history as f64) * self.step
    }

    /// Number of mesh steps in one freeze period `1/n`.
    pub fn freeze_stride(&self, n: usize) -> Result<usize> {
        if n == 0 {
            return Err(Error::NonAlignedFreeze { n, step: self.step });
        }
        aligned_ratio(1.0 / n as f64, self.step).ok_or(Error::NonAlignedFreeze { n, step: self.step })
    }
}

/// Constructs a [`TimeMesh`] with `step = tau / steps_per_tau`.
pub fn make_mesh(tau: f64, horizon: f64, steps_per_tau: usize) -> Result<TimeMesh> {
    TimeMesh::new(tau, horizon, steps_per_tau)
}

fn aligned_ratio(length: f64, step: f64) -> Option<usize> {
    let ratio = length / step;
    let rounded = ratio.round();
    if rounded >= 1.0 && (ratio - rounded).abs() <= ALIGN_TOL * rounded.max(1.0) {
        Some(rounded as usize)
    } else {
        None
    }
}
