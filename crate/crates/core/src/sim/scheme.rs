use crate::error::{Error, Result};
use crate::model::{CoefficientSet, PathTrajectory, Segment, TimeMesh};
use crate::sim::fixed_point::FixedPointTrace;
use crate::sim::kernel::march;
use crate::sim::noise::{brownian_increments, BrownianIncrements, NoiseSeed};

/// Default absolute tolerance of the neutral fixed point.
pub const DEFAULT_NEUTRAL_TOL: f64 = 1e-12;

fn check_eps(eps: f64) -> Result<f64> {
    if eps >= 0.0 && eps.is_finite() {
        Ok(eps.sqrt())
    } else {
        Err(Error::InvalidArgument(format!("eps must be >= 0, got {eps}")))
    }
}

fn check_increments(coeffs: &CoefficientSet, mesh: &TimeMesh, w: &BrownianIncrements) -> Result<()> {
    if w.dim() != coeffs.dim() {
        return Err(Error::DimensionMismatch {
            expected: coeffs.dim(),
            got: w.dim(),
        });
    }
    if w.mesh() != mesh {
        return Err(Error::InvalidArgument("increments belong to a different mesh".into()));
    }
    Ok(())
}

/// One Euler-Maruyama path of the NSFDE driven by `sqrt(eps) W`.
pub fn simulate_nsfde(
    coeffs: &CoefficientSet,
    xi: &Segment,
    eps: f64,
    mesh: &TimeMesh,
    seed: NoiseSeed,
    tol: f64,
) -> Result<PathTrajectory> {
    let w = brownian_increments(mesh, coeffs.dim(), seed);
    simulate_nsfde_with(coeffs, xi, eps, &w, tol)
}

/// As [`simulate_nsfde`] with caller-supplied increments.
pub fn simulate_nsfde_with(
    coeffs: &CoefficientSet,
    xi: &Segment,
    eps: f64,
    w: &BrownianIncrements,
    tol: f64,
) -> Result<PathTrajectory> {
    run(coeffs, xi, eps, w, None, tol, None)
}

/// As [`simulate_nsfde_with`], also returning per-step fixed-point diagnostics.
pub fn simulate_nsfde_traced(
    coeffs: &CoefficientSet,
    xi: &Segment,
    eps: f64,
    w: &BrownianIncrements,
    tol: f64,
) -> Result<(PathTrajectory, Vec<FixedPointTrace>)> {
    let mut trace = Vec::with_capacity(w.len());
    let path = run(coeffs, xi, eps, w, None, tol, Some(&mut trace))?;
    Ok((path, trace))
}

/// Frozen-argument scheme: the diffusion sees `X((t + theta) ^ t_n)`, `t_n = [nt]/n`.
pub fn simulate_frozen_scheme(
    coeffs: &CoefficientSet,
    xi: &Segment,
    eps: f64,
    mesh: &TimeMesh,
    n: usize,
    seed: NoiseSeed,
    tol: f64,
) -> Result<PathTrajectory> {
    let w = brownian_increments(mesh, coeffs.dim(), seed);
    simulate_frozen_with(coeffs, xi, eps, n, &w, tol)
}

pub fn simulate_frozen_with(
    coeffs: &CoefficientSet,
    xi: &Segment,
    eps: f64,
    n: usize,
    w: &BrownianIncrements,
    tol: f64,
) -> Result<PathTrajectory> {
    let stride = w.mesh().freeze_stride(n)?;
    run(coeffs, xi, eps, w, Some(stride), tol, None)
}

fn run(
    coeffs: &CoefficientSet,
    xi: &Segment,
    eps: f64,
    w: &BrownianIncrements,
    freeze: Option<usize>,
    tol: f64,
    trace: Option<&mut Vec<FixedPointTrace>>,
) -> Result<PathTrajectory> {
    let sqrt_eps = check_eps(eps)?;
    let mesh = *w.mesh();
    check_increments(coeffs, &mesh, w)?;
    march(
        coeffs,
        xi,
        &mesh,
        freeze,
        tol,
        |k, v| {
            for (vi, dw) in v.iter_mut().zip(w.get(k)) {
                *vi = sqrt_eps * dw;
            }
        },
        trace,
    )
}

/// Segment at forward index `t_index` with every slot later than `t_n` replaced by the value at `t_n`.
pub fn frozen_segment(path: &PathTrajectory, t_index: i64, n: usize) -> Result<Segment> {
    let mesh = path.mesh();
    let stride = mesh.freeze_stride(n)?;
    if t_index < 0 || t_index as usize > mesh.n_forward() {
        return Err(Error::IndexOutOfRange {
            index: t_index,
            max: mesh.n_forward(),
        });
    }
    let k = t_index as usize;
    let cap = (k / stride) * stride + mesh.n_history();
    let window = (0..mesh.window_len())
        .flat_map(|s| path.value((k + s).min(cap)).iter().copied())
        .collect();
    Segment::new(path.dim(), window)
}
