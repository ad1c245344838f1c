//! Sampling-based falsification of the coefficient hypotheses.
//!
//! A passing report only means no counterexample was found among the sampled
//! pairs; the coefficient functionals are treated as black boxes.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{hilbert_schmidt, path::euclidean, CoefficientSet, Segment};

/// Relative slack granted to a sampled ratio before it counts as a violation.
pub const CHECK_SLACK: f64 = 1e-9;

/// Absolute tolerance for `G(0) = 0`.
const ZERO_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Assumption {
    /// One-sided Lipschitz drift and Lipschitz diffusion, constant `L`.
    H1,
    /// Contractive neutral term with `G(0) = 0`, constant `kappa`.
    H2,
    /// Bounded drift and diffusion, constant `M`.
    H3,
}

impl fmt::Display for Assumption {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Assumption::H1 => "H1",
            Assumption::H2 => "H2",
            Assumption::H3 => "H3",
        };
        f.write_str(name)
    }
}

/// Source of segment pairs for the checker.
pub trait PairSampler: Sync {
    fn sample_pair(&self, rng: &mut ChaCha8Rng, trial: usize) -> (Segment, Segment);
}

/// Piecewise-linear random segments with entries in `[-amplitude, amplitude]`;
/// the partner is a perturbation whose scale cycles through `scales`.
#[derive(Debug, Clone)]
pub struct PiecewiseLinearSampler {
    pub dim: usize,
    pub slots: usize,
    pub knots: usize,
    pub amplitude: f64,
    pub scales: Vec<f64>,
}

impl PiecewiseLinearSampler {
    pub fn new(dim: usize, slots: usize) -> Self {
        Self {
            dim,
            slots,
            knots: 5,
            amplitude: 2.0,
            scales: vec![1e-3, 1e-1, 1.0],
        }
    }

    fn piecewise_linear(&self, rng: &mut ChaCha8Rng, amplitude: f64) -> Vec<f64> {
        let knots = self.knots.max(2);
        let values: Vec<f64> = (0..knots * self.dim)
            .map(|_| rng.random_range(-amplitude..=amplitude))
            .collect();
        let mut window = Vec::with_capacity(self.slots * self.dim);
        for s in 0..self.slots {
            let pos = if self.slots == 1 {
                0.0
            } else {
                s as f64 * (knots - 1) as f64 / (self.slots - 1) as f64
            };
            let left = (pos.floor() as usize).min(knots - 2);
            let w = pos - left as f64;
            for i in 0..self.dim {
                let a = values[left * self.dim + i];
                let b = values[(left + 1) * self.dim + i];
                window.push(a + w * (b - a));
            }
        }
        window
    }
}

impl PairSampler for PiecewiseLinearSampler {
    fn sample_pair(&self, rng: &mut ChaCha8Rng, trial: usize) -> (Segment, Segment) {
        let base = self.piecewise_linear(rng, self.amplitude);
        let scale = self.scales[trial % self.scales.len()];
        let bump = self.piecewise_linear(rng, 1.0);
        let other = base.iter().zip(&bump).map(|(x, p)| x + scale * p).collect();
        (
            Segment::new(self.dim, base).expect("sampler shape"),
            Segment::new(self.dim, other).expect("sampler shape"),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionReport {
    pub assumption: Assumption,
    pub passed: bool,
    /// Largest sampled value of the constant under test.
    pub worst_ratio: f64,
    pub declared: f64,
    pub witness_pair: (Segment, Segment),
    pub trials: usize,
}

/// Samples `trials` pairs and records the worst observed constant for `which`.
pub fn check_assumption(
    coeffs: &CoefficientSet,
    which: Assumption,
    sampler: &dyn PairSampler,
    trials: usize,
    seed: u64,
) -> Result<AssumptionReport> {
    if trials == 0 {
        return Err(Error::NonPositiveInput("trials"));
    }
    let declared = match which {
        Assumption::H1 => coeffs.lip_l,
        Assumption::H2 => coeffs.kappa,
        Assumption::H3 => coeffs.bound_m,
    }
    .ok_or(Error::MissingConstant(which))?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::NEG_INFINITY;
    let mut witness = None;

    for trial in 0..trials {
        let (xi, eta) = sampler.sample_pair(&mut rng, trial);
        if xi.dim() != coeffs.dim() {
            return Err(Error::DimensionMismatch {
                expected: coeffs.dim(),
                got: xi.dim(),
            });
        }
        let ratio = match which {
            Assumption::H1 => h1_ratio(coeffs, &xi, &eta),
            Assumption::H2 => h2_ratio(coeffs, &xi, &eta),
            Assumption::H3 => Some(h3_value(coeffs, &xi).max(h3_value(coeffs, &eta))),
        };
        if let Some(r) = ratio {
            if r > worst || witness.is_none() {
                worst = r;
                witness = Some((xi, eta));
            }
        }
    }

    if which == Assumption::H2 {
        // G(0) = 0 is part of the hypothesis, not just the Lipschitz bound
        let zero = Segment::new(coeffs.dim(), vec![0.0; coeffs.dim() * sampler_slots(&witness)])?;
        if euclidean(&coeffs.eval_neutral(zero.view())) > ZERO_TOL {
            worst = f64::INFINITY;
            witness = Some((zero.clone(), zero));
        }
    }

    let witness = match witness {
        Some(w) => w,
        None => {
            // every sampled pair coincided
            worst = 0.0;
            let zero = Segment::new(coeffs.dim(), vec![0.0; coeffs.dim()])?;
            (zero.clone(), zero)
        }
    };

    Ok(AssumptionReport {
        assumption: which,
        passed: worst <= declared * (1.0 + CHECK_SLACK),
        worst_ratio: worst,
        declared,
        witness_pair: witness,
        trials,
    })
}

fn sampler_slots(witness: &Option<(Segment, Segment)>) -> usize {
    witness.as_ref().map_or(1, |(a, _)| a.len())
}

fn h1_ratio(c: &CoefficientSet, xi: &Segment, eta: &Segment) -> Option<f64> {
    let dist = xi.difference(eta).ok()?.uniform_norm();
    if dist == 0.0 {
        return None;
    }
    let (gx, ge) = (c.eval_neutral(xi.view()), c.eval_neutral(eta.view()));
    let (bx, be) = (c.eval_drift(xi.view()), c.eval_drift(eta.view()));
    let one_sided: f64 = (0..c.dim())
        .map(|i| 2.0 * (xi.head()[i] - eta.head()[i] + ge[i] - gx[i]) * (bx[i] - be[i]))
        .sum();
    let sx = c.eval_diffusion(xi.view());
    let se = c.eval_diffusion(eta.view());
    let diff: Vec<f64> = sx.iter().zip(&se).map(|(a, b)| a - b).collect();
    let sigma_sq = hilbert_schmidt(&diff).powi(2);
    Some((one_sided / (dist * dist)).max(sigma_sq / (dist * dist)))
}

fn h2_ratio(c: &CoefficientSet, xi: &Segment, eta: &Segment) -> Option<f64> {
    let dist = xi.difference(eta).ok()?.uniform_norm();
    if dist == 0.0 {
        return None;
    }
    let gx = c.eval_neutral(xi.view());
    let ge = c.eval_neutral(eta.view());
    let diff: Vec<f64> = gx.iter().zip(&ge).map(|(a, b)| a - b).collect();
    Some(euclidean(&diff) / dist)
}

fn h3_value(c: &CoefficientSet, xi: &Segment) -> f64 {
    euclidean(&c.eval_drift(xi.view())).max(hilbert_schmidt(&c.eval_diffusion(xi.view())))
}
