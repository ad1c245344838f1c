//! Neutral stochastic functional differential equations: path simulation,
//! controlled skeleton equations, discretized rate functionals, and Monte
//! Carlo checks of their large-deviation behaviour.

pub mod error;
pub mod lab;
pub mod model;
pub mod sim;
pub mod rate;
pub mod skeleton;

pub use error::{Error, Result};
