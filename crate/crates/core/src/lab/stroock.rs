use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::lab::mc::{count_true, replicate};
use crate::lab::MCResult;
use crate::sim::{GaussianStream, NoiseSeed};

/// `P(N(0,1) > x)`.
pub fn normal_tail(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

/// `P(sup_{t <= T} |a W(t)| >= r)` for scalar Brownian motion.
///
/// Uses the image series `4 * sum_k (-1)^k Phibar((2k+1) z)` with
/// `z = r / (a sqrt T)` when `z >= 1`, and the eigenfunction series
/// `1 - (4/pi) sum_k (-1)^k / (2k+1) exp(-(2k+1)^2 pi^2 / (8 z^2))` otherwise.
pub fn two_sided_exit_probability(a: f64, r: f64, t: f64) -> f64 {
    let z = r / (a * t.sqrt());
    let mut sum = 0.0;
    if z >= 1.0 {
        for k in 0..64 {
            let term = normal_tail((2 * k + 1) as f64 * z);
            sum += if k % 2 == 0 { term } else { -term };
        }
        (4.0 * sum).clamp(0.0, 1.0)
    } else {
        let c = std::f64::consts::PI.powi(2) / (8.0 * z * z);
        for k in 0..64 {
            let m = (2 * k + 1) as f64;
            let term = (-m * m * c).exp() / m;
            sum += if k % 2 == 0 { term } else { -term };
        }
        (1.0 - 4.0 / std::f64::consts::PI * sum).clamp(0.0, 1.0)
    }
}

/// Constants of the inequality: `||alpha|| <= A`, `|beta| <= B`, barrier `R`, horizon `T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StroockSetup {
    pub a: f64,
    pub b: f64,
    pub r: f64,
    pub t: f64,
    pub dim: usize,
}

/// `2 d exp(-(R - sqrt(d) B T)^2 / (2 A^2 d T))`.
pub fn stroock_bound(setup: &StroockSetup) -> Result<f64> {
    let StroockSetup { a, b, r, t, dim } = *setup;
    let d = dim as f64;
    let shift = d.sqrt() * b * t;
    if shift >= r {
        return Err(Error::PreconditionViolated(format!(
            "sqrt(d) B T = {shift} must be below R = {r}"
        )));
    }
    Ok(2.0 * d * (-(r - shift).powi(2) / (2.0 * a * a * d * t)).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StroockCheck {
    pub empirical: MCResult,
    pub bound: f64,
    /// Exact exit probability, available for `d = 1` and `B = 0`.
    pub oracle: Option<f64>,
    /// `empirical.probability <= bound + ci_halfwidth_95`.
    pub within_bound: bool,
}

/// Estimates `P(sup_{t <= T} |xi(t)| >= R)` for `xi(t) = alpha W(t) + beta t`
/// with `alpha = (A / sqrt d) I` and `beta = (B / sqrt d)(1, ..., 1)`, so that
/// `||alpha||_HS = A` and `|beta| = B`.
///
/// In one dimension crossings between grid points are sampled exactly from
/// the Brownian-bridge law; for `d > 1` the supremum is monitored on the grid
/// only, which biases the estimate low.
pub fn stroock_bound_check(setup: &StroockSetup, samples: u64, seed: u64, steps: usize) -> Result<StroockCheck> {
    let StroockSetup { a, b, r, t, dim } = *setup;
    for (v, name) in [(a, "A"), (r, "R"), (t, "T")] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::NonPositiveInput(name));
        }
    }
    if b < 0.0 || !b.is_finite() {
        return Err(Error::InvalidArgument("B must be a finite non-negative number".into()));
    }
    if dim == 0 {
        return Err(Error::NonPositiveInput("dim"));
    }
    if samples == 0 {
        return Err(Error::NonPositiveInput("samples"));
    }
    if steps == 0 {
        return Err(Error::NonPositiveInput("steps"));
    }
    let bound = stroock_bound(setup)?;

    let d = dim as f64;
    let dt = t / steps as f64;
    let (sd, drift) = (a / d.sqrt() * dt.sqrt(), b / d.sqrt() * dt);
    let var = a * a / d * dt;
    let hits = replicate(samples, |i| {
        let mut z = GaussianStream::new(NoiseSeed::new(seed, i));
        let mut x = vec![0.0; dim];
        for _ in 0..steps {
            let prev = x[0];
            for xj in x.iter_mut() {
                *xj += sd * z.next_standard() + drift;
            }
            if x.iter().map(|v| v * v).sum::<f64>() >= r * r {
                return Ok(true);
            }
            if dim == 1 {
                let (x0, x1) = (prev, x[0]);
                let up = (-2.0 * (r - x0) * (r - x1) / var).exp();
                let down = (-2.0 * (r + x0) * (r + x1) / var).exp();
                let cross = 1.0 - (1.0 - up) * (1.0 - down);
                if z.next_uniform() < cross {
                    return Ok(true);
                }
            }
        }
        Ok(false)
    })?;
    let empirical = MCResult::from_counts(count_true(hits), samples, 1.0, NoiseSeed::new(seed, 0));
    let oracle = (dim == 1 && b == 0.0).then(|| two_sided_exit_probability(a, r, t));
    Ok(StroockCheck {
        within_bound: empirical.probability <= bound + empirical.ci_halfwidth_95,
        empirical,
        bound,
        oracle,
    })
}
