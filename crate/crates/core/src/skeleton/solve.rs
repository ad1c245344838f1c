use crate::error::{Error, Result};
use crate::model::{CoefficientSet, PathTrajectory, Segment, TimeMesh};
use crate::sim::kernel::march;
use crate::skeleton::{truncate_coeffs, ControlPath};

fn forcing<'a>(h: &'a ControlPath) -> impl FnMut(usize, &mut [f64]) + 'a {
    let dt = h.mesh().step();
    move |k, v| {
        for (vi, hd) in v.iter_mut().zip(h.hdot_at(k)) {
            *vi = hd * dt;
        }
    }
}

fn check_control(coeffs: &CoefficientSet, h: &ControlPath) -> Result<TimeMesh> {
    if h.dim() != coeffs.dim() {
        return Err(Error::DimensionMismatch {
            expected: coeffs.dim(),
            got: h.dim(),
        });
    }
    Ok(*h.mesh())
}

/// Skeleton `F^n(h)`: the controlled equation with the diffusion argument frozen at `t_n = [nt]/n`.
pub fn solve_skeleton_n(
    coeffs: &CoefficientSet,
    xi: &Segment,
    h: &ControlPath,
    n: usize,
    tol: f64,
) -> Result<PathTrajectory> {
    let mesh = check_control(coeffs, h)?;
    let stride = mesh.freeze_stride(n)?;
    march(coeffs, xi, &mesh, Some(stride), tol, forcing(h), None)
}

/// Skeleton `F(h)`: `F(t) - G(F_t) = xi(0) - G(xi) + int b(F_s) ds + int sigma(F_s) hdot ds`.
pub fn solve_skeleton(
    coeffs: &CoefficientSet,
    xi: &Segment,
    h: &ControlPath,
    tol: f64,
) -> Result<PathTrajectory> {
    let mesh = check_control(coeffs, h)?;
    march(coeffs, xi, &mesh, None, tol, forcing(h), None)
}

/// Row of a [`skeleton_convergence_sweep`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub n: usize,
    pub sup_distance: f64,
}

/// `sup_t |F^n(h)(t) - F(h)(t)|` for each `n`.
pub fn skeleton_convergence_sweep(
    coeffs: &CoefficientSet,
    xi: &Segment,
    h: &ControlPath,
    n_list: &[usize],
    tol: f64,
) -> Result<Vec<SweepRow>> {
    for &n in n_list {
        h.mesh().freeze_stride(n)?;
    }
    let limit = solve_skeleton(coeffs, xi, h, tol)?;
    n_list
        .iter()
        .map(|&n| {
            let approx = solve_skeleton_n(coeffs, xi, h, n, tol)?;
            Ok(SweepRow {
                n,
                sup_distance: approx.sup_distance(&limit),
            })
        })
        .collect()
}

/// Least-squares slope of `ln(sup_distance)` against `ln(n)`; rows with zero distance are skipped.
pub fn log_log_slope(rows: &[SweepRow]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.sup_distance > 0.0)
        .map(|r| ((r.n as f64).ln(), r.sup_distance.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some(sxy / sxx)
}

/// `F^R(h)`: [`solve_skeleton`] with coefficients clamped to `+-(m_r + 1)`.
pub fn solve_skeleton_truncated(
    coeffs: &CoefficientSet,
    r: f64,
    m_r: f64,
    xi: &Segment,
    h: &ControlPath,
    tol: f64,
) -> Result<PathTrajectory> {
    let truncated = truncate_coeffs(coeffs, r, m_r)?;
    solve_skeleton(&truncated, xi, h, tol)
}
