//! Monte Carlo experiments: exponential closeness of approximating schemes,
//! tightness, the Stroock inequality, and `eps * ln P` against the rate function.
//!
//! Replicate `i` of every cell draws its noise from stream `i` of the plan's
//! seed. Success counts are reduced as integer sums, so results do not depend
//! on the number of worker threads.

mod compare;
mod curve;
mod experiments;
mod mc;
mod stroock;

pub use compare::{compare_against_value, compare_rate_vs_mc, eps_log_max, CompareReport, EpsLogRow};
pub use curve::{DecayCurve, DecayRow};
pub use experiments::{verify_exponential_closeness, verify_tightness, verify_truncation_closeness};
pub use mc::{mc_probability, McPlan, MCResult};
pub use stroock::{normal_tail, stroock_bound, stroock_bound_check, two_sided_exit_probability, StroockCheck, StroockSetup};
