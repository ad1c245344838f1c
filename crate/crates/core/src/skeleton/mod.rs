//! Deterministic controlled (skeleton) equations and coefficient truncation.

mod control;
mod solve;
mod truncate;

pub use control::ControlPath;
pub use solve::{
    log_log_slope, skeleton_convergence_sweep, solve_skeleton, solve_skeleton_n, solve_skeleton_truncated,
    SweepRow,
};
pub use truncate::{estimate_m_r, truncate_coeffs};
