use crate::error::{Error, Result};
use crate::model::{CoefficientSet, PathTrajectory, Segment, SegmentView, TimeMesh};
use crate::sim::fixed_point::{solve_head_in_place, FixedPointTrace, MAX_NEUTRAL_ITER};

/// Euler recursion on `M = X - G(X_t)`:
/// `M(t_{k+1}) = M(t_k) + b(X_{t_k}) dt + sigma(arg_k) v_k`,
/// followed by the neutral fixed point for `X(t_{k+1})`.
///
/// `forcing(k, v)` writes `v_k` (`sqrt(eps) dW_k` or `hdot_k dt`). With
/// `freeze = Some(stride)` the diffusion argument is the segment frozen at the
/// last multiple of `stride`; the drift always sees the live segment.
pub(crate) fn march<F>(
    coeffs: &CoefficientSet,
    xi: &Segment,
    mesh: &TimeMesh,
    freeze: Option<usize>,
    tol: f64,
    mut forcing: F,
    mut trace: Option<&mut Vec<FixedPointTrace>>,
) -> Result<PathTrajectory>
where
    F: FnMut(usize, &mut [f64]),
{
    let d = coeffs.dim();
    if xi.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: xi.dim(),
        });
    }
    if !(tol > 0.0) {
        return Err(Error::NonPositiveInput("tol"));
    }
    let nh = mesh.n_history();
    let dt = mesh.step();
    let w = mesh.window_len() * d;
    let mut path = PathTrajectory::from_initial(mesh, xi)?;

    let neutral = &**coeffs.neutral_fn();
    let drift = &**coeffs.drift_fn();
    let diffusion = &**coeffs.diffusion_fn();

    let mut m = vec![0.0; d];
    let mut b = vec![0.0; d];
    let mut sigma = vec![0.0; d * d];
    let mut v = vec![0.0; d];
    let mut image = vec![0.0; d];
    // values up to the freeze point, then that value repeated for one stride,
    // so each frozen segment is a contiguous slice
    let mut frozen = vec![0.0; freeze.map_or(0, |stride| (mesh.len() + stride) * d)];
    let mut copied = 0;

    {
        let x0 = path.window(0);
        neutral(x0, &mut image);
        for i in 0..d {
            m[i] = x0.head()[i] - image[i];
        }
    }

    for k in 0..mesh.n_forward() {
        {
            let values = path.as_slice();
            let live = SegmentView::new(d, &values[k * d..k * d + w]);
            drift(live, &mut b);
            match freeze {
                Some(stride) if k % stride != 0 => {
                    let cap = (k / stride) * stride + nh;
                    if copied <= cap {
                        frozen[copied * d..(cap + 1) * d].copy_from_slice(&values[copied * d..(cap + 1) * d]);
                        for j in cap + 1..=cap + stride {
                            frozen.copy_within(cap * d..(cap + 1) * d, j * d);
                        }
                        copied = cap + 1;
                    }
                    diffusion(SegmentView::new(d, &frozen[k * d..k * d + w]), &mut sigma);
                }
                _ => diffusion(live, &mut sigma),
            }
        }
        forcing(k, &mut v);
        for i in 0..d {
            let mut acc = b[i] * dt;
            for j in 0..d {
                acc += sigma[i * d + j] * v[j];
            }
            m[i] += acc;
        }
        let values = path.values_mut();
        let next = &mut values[(k + 1) * d..(k + 1) * d + w];
        let t = solve_head_in_place(neutral, next, d, &m, tol, MAX_NEUTRAL_ITER, &mut image)?;
        if let Some(tr) = trace.as_deref_mut() {
            tr.push(t);
        }
    }
    Ok(path)
}
