use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CoefficientSet, PathTrajectory, Segment, TimeMesh};
use crate::sim::{brownian_increments, simulate_nsfde_with, NoiseSeed, DEFAULT_NEUTRAL_TOL};

/// Mesh, budget and seed shared by the cells of an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McPlan {
    pub mesh: TimeMesh,
    pub samples: u64,
    pub seed: u64,
    pub neutral_tol: f64,
}

impl McPlan {
    pub fn new(mesh: TimeMesh, samples: u64, seed: u64) -> Self {
        Self {
            mesh,
            samples,
            seed,
            neutral_tol: DEFAULT_NEUTRAL_TOL,
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(Error::NonPositiveInput("samples"));
        }
        if !(self.neutral_tol > 0.0) {
            return Err(Error::NonPositiveInput("neutral_tol"));
        }
        Ok(())
    }

    pub(crate) fn stream(&self, i: u64) -> NoiseSeed {
        NoiseSeed::new(self.seed, i)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MCResult {
    pub probability: f64,
    pub samples: u64,
    pub successes: u64,
    pub ci_halfwidth_95: f64,
    pub eps: f64,
    /// Stream 0 of the cell; replicate `i` uses stream `i`.
    pub seed: NoiseSeed,
}

impl MCResult {
    pub fn from_counts(successes: u64, samples: u64, eps: f64, seed: NoiseSeed) -> Self {
        let p = successes as f64 / samples as f64;
        Self {
            probability: p,
            samples,
            successes,
            ci_halfwidth_95: 1.96 * (p * (1.0 - p) / samples as f64).sqrt(),
            eps,
            seed,
        }
    }
}

/// Runs `f` on replicates `0..samples` and returns the per-replicate outputs in order.
/// The first failing replicate by index determines the error.
pub(crate) fn replicate<T, F>(samples: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync,
{
    let out: Vec<Result<T>> = (0..samples).into_par_iter().map(&f).collect();
    out.into_iter().collect()
}

pub(crate) fn count_true<I: IntoIterator<Item = bool>>(flags: I) -> u64 {
    flags.into_iter().filter(|b| *b).count() as u64
}

/// Fraction of replicates of `X^eps` whose full trajectory lies in `event`.
pub fn mc_probability<E>(
    event: E,
    coeffs: &CoefficientSet,
    xi: &Segment,
    eps: f64,
    plan: &McPlan,
) -> Result<MCResult>
where
    E: Fn(&PathTrajectory) -> bool + Sync,
{
    plan.validate()?;
    let hits = replicate(plan.samples, |i| {
        let w = brownian_increments(&plan.mesh, coeffs.dim(), plan.stream(i));
        let path = simulate_nsfde_with(coeffs, xi, eps, &w, plan.neutral_tol)?;
        Ok(event(&path))
    })?;
    Ok(MCResult::from_counts(count_true(hits), plan.samples, eps, plan.stream(0)))
}
