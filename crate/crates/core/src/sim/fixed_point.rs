use crate::error::{Error, Result};
use crate::model::{Segment, SegmentView};

/// Iteration cap for the neutral step; far beyond what any `kappa < 1` needs at `1e-12`.
pub const MAX_NEUTRAL_ITER: usize = 20_000;

/// Diagnostics from one neutral fixed-point solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPointTrace {
    pub iterations: usize,
    pub initial_residual: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixedPointOutcome {
    pub value: Vec<f64>,
    pub trace: FixedPointTrace,
}

/// Solves `x = G(window with head x) + rhs` for the head slot of `prev_window`.
///
/// Iteration starts from the slot just before the head (the previous mesh
/// value). Returns `x` with `|x - G(window(x)) - rhs| <= tol`.
pub fn neutral_fixed_point_step<G>(
    g: G,
    prev_window: &Segment,
    rhs: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<FixedPointOutcome>
where
    G: Fn(SegmentView<'_>, &mut [f64]),
{
    let dim = prev_window.dim();
    if rhs.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: rhs.len(),
        });
    }
    if prev_window.len() < 2 {
        return Err(Error::InvalidArgument(
            "neutral step needs at least two window slots".into(),
        ));
    }
    let mut window = prev_window.clone();
    let mut scratch = vec![0.0; dim];
    let trace = solve_head_in_place(&g, window.as_mut_slice(), dim, rhs, tol, max_iter, &mut scratch)?;
    Ok(FixedPointOutcome {
        value: window.head().to_vec(),
        trace,
    })
}

/// In-place kernel: overwrites the head slot of `window`.
pub(crate) fn solve_head_in_place<G>(
    g: &G,
    window: &mut [f64],
    dim: usize,
    rhs: &[f64],
    tol: f64,
    max_iter: usize,
    image: &mut [f64],
) -> Result<FixedPointTrace>
where
    G: Fn(SegmentView<'_>, &mut [f64]) + ?Sized,
{
    let len = window.len();
    let head = len - dim;
    window.copy_within(head - dim..head, head);

    let apply = |window: &[f64], image: &mut [f64]| -> f64 {
        g(SegmentView::new(dim, window), image);
        let mut r2 = 0.0;
        for i in 0..dim {
            image[i] += rhs[i];
            let e = window[head + i] - image[i];
            r2 += e * e;
        }
        r2.sqrt()
    };

    let initial_residual = apply(window, image);
    let mut residual = initial_residual;
    if residual <= tol {
        return Ok(FixedPointTrace {
            iterations: 0,
            initial_residual,
            residual,
        });
    }
    for it in 1..=max_iter {
        window[head..].copy_from_slice(image);
        residual = apply(window, image);
        if residual <= tol {
            return Ok(FixedPointTrace {
                iterations: it,
                initial_residual,
                residual,
            });
        }
        if !residual.is_finite() {
            break;
        }
    }
    Err(Error::NoConvergence {
        residual,
        iterations: max_iter,
    })
}
