//! Discretized Freidlin–Wentzell quantities: the action `L_T(h)`, the rate
//! function `I(f) = inf { L_T(h) : F(h) = f }` over simple event shapes, and
//! an exact least-norm solution for affine dynamics.

mod event;
mod optimize;
mod oracle;

pub use event::EventSpec;
pub use optimize::{
    fd_gradient_check, rate_for_event, rate_for_event_truncated, FdCheck, RateOptions, RateResult,
};
pub use oracle::qp_oracle_linear;

use crate::skeleton::ControlPath;

/// `L_T(h) = 1/2 * sum_k |hdot_k|^2 * step`.
pub fn action(h: &ControlPath) -> f64 {
    0.5 * h.mesh().step() * h.hdot().iter().map(|x| x * x).sum::<f64>()
}
