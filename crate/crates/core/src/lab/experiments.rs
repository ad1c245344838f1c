use crate::error::{Error, Result};
use crate::lab::mc::{replicate, McPlan};
use crate::lab::{DecayCurve, DecayRow, MCResult};
use crate::model::{CoefficientSet, PathTrajectory, Segment};
use crate::sim::{brownian_increments, simulate_frozen_with, simulate_nsfde_with, BrownianIncrements};
use crate::skeleton::truncate_coeffs;

fn check_eps(eps_list: &[f64]) -> Result<()> {
    if eps_list.is_empty() {
        return Err(Error::InvalidArgument("eps_list is empty".into()));
    }
    if eps_list.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
        return Err(Error::NonPositiveInput("eps"));
    }
    Ok(())
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 {
        Ok(())
    } else {
        Err(Error::NonPositiveInput("delta"))
    }
}

fn non_empty<T>(list: &[T], name: &str) -> Result<()> {
    if list.is_empty() {
        Err(Error::InvalidArgument(format!("{name} is empty")))
    } else {
        Ok(())
    }
}

/// Builds a curve from per-replicate event flags, one flag per control parameter.
fn sweep<F>(label: &str, params: &[f64], eps_list: &[f64], plan: &McPlan, dim: usize, cell: F) -> Result<DecayCurve>
where
    F: Fn(f64, &BrownianIncrements) -> Result<Vec<bool>> + Sync,
{
    plan.validate()?;
    check_eps(eps_list)?;
    let mut rows = Vec::with_capacity(params.len() * eps_list.len());
    for &eps in eps_list {
        let flags = replicate(plan.samples, |i| {
            let w = brownian_increments(&plan.mesh, dim, plan.stream(i));
            cell(eps, &w)
        })?;
        for (j, &param) in params.iter().enumerate() {
            let hits = flags.iter().filter(|f| f[j]).count() as u64;
            let mc = MCResult::from_counts(hits, plan.samples, eps, plan.stream(0));
            rows.push(DecayRow::from_mc(param, &mc));
        }
    }
    Ok(DecayCurve {
        label: label.to_string(),
        rows,
    })
}

/// `P(sup_t |X^eps(t) - X^{eps,n}(t)| > delta)` over `n` and `eps`, both
/// schemes driven by the same increments.
pub fn verify_exponential_closeness(
    coeffs: &CoefficientSet,
    xi: &Segment,
    delta: f64,
    n_list: &[usize],
    eps_list: &[f64],
    plan: &McPlan,
) -> Result<DecayCurve> {
    check_delta(delta)?;
    non_empty(n_list, "n_list")?;
    for &n in n_list {
        plan.mesh.freeze_stride(n)?;
    }
    let params: Vec<f64> = n_list.iter().map(|&n| n as f64).collect();
    sweep("exponential-closeness", &params, eps_list, plan, coeffs.dim(), |eps, w| {
        let x = simulate_nsfde_with(coeffs, xi, eps, w, plan.neutral_tol)?;
        n_list
            .iter()
            .map(|&n| {
                let xn = simulate_frozen_with(coeffs, xi, eps, n, w, plan.neutral_tol)?;
                Ok(x.sup_distance(&xn) > delta)
            })
            .collect()
    })
}

/// `P(sup_t |X^eps(t)| > R)` over `R` and `eps`; the supremum runs over the whole mesh.
pub fn verify_tightness(
    coeffs: &CoefficientSet,
    xi: &Segment,
    r_list: &[f64],
    eps_list: &[f64],
    plan: &McPlan,
) -> Result<DecayCurve> {
    non_empty(r_list, "R_list")?;
    sweep("tightness", r_list, eps_list, plan, coeffs.dim(), |eps, w| {
        let sup = simulate_nsfde_with(coeffs, xi, eps, w, plan.neutral_tol)?.sup_norm();
        Ok(r_list.iter().map(|&r| sup > r).collect())
    })
}

/// `P(sup_t |X^eps(t) - X^{eps,R}(t)| > delta)` where `X^{eps,R}` uses the
/// coefficients truncated at level `m_r_list[i] + 1` for `R = r_list[i]`.
pub fn verify_truncation_closeness(
    coeffs: &CoefficientSet,
    xi: &Segment,
    delta: f64,
    r_list: &[f64],
    m_r_list: &[f64],
    eps_list: &[f64],
    plan: &McPlan,
) -> Result<DecayCurve> {
    check_delta(delta)?;
    non_empty(r_list, "R_list")?;
    if m_r_list.len() != r_list.len() {
        return Err(Error::DimensionMismatch {
            expected: r_list.len(),
            got: m_r_list.len(),
        });
    }
    let truncated = r_list
        .iter()
        .zip(m_r_list)
        .map(|(&r, &m)| truncate_coeffs(coeffs, r, m))
        .collect::<Result<Vec<_>>>()?;
    sweep("truncation-closeness", r_list, eps_list, plan, coeffs.dim(), |eps, w| {
        let x: PathTrajectory = simulate_nsfde_with(coeffs, xi, eps, w, plan.neutral_tol)?;
        truncated
            .iter()
            .map(|c| {
                let xr = simulate_nsfde_with(c, xi, eps, w, plan.neutral_tol)?;
                Ok(x.sup_distance(&xr) > delta)
            })
            .collect()
    })
}
