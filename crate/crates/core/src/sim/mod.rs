//! Stochastic path simulation and the frozen-argument approximation.

mod fixed_point;
pub(crate) mod kernel;
mod noise;
mod scheme;

pub use fixed_point::{neutral_fixed_point_step, FixedPointOutcome, FixedPointTrace, MAX_NEUTRAL_ITER};
pub use noise::{brownian_increments, inverse_normal_cdf, BrownianIncrements, GaussianStream, NoiseSeed};
pub use scheme::{
    frozen_segment, simulate_frozen_scheme, simulate_frozen_with, simulate_nsfde, simulate_nsfde_traced,
    simulate_nsfde_with, DEFAULT_NEUTRAL_TOL,
};
