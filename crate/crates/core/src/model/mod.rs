//! Meshes, paths, segments, coefficient functionals and assumption checks.

mod affine;
mod assumptions;
mod coeffs;
mod mesh;
pub(crate) mod path;
mod presets;

pub use affine::{AffineMap, AffineSpec, DenseAffine};
pub use assumptions::{
    check_assumption, Assumption, AssumptionReport, PairSampler, PiecewiseLinearSampler,
    CHECK_SLACK,
};
pub use coeffs::{hilbert_schmidt, CoefficientSet, MatrixFunctional, VectorFunctional};
pub use mesh::{make_mesh, TimeMesh};
pub use path::{segment_at, uniform_norm, PathTrajectory, Segment, SegmentView};
pub use presets::{Preset, PRESET_NAMES};
