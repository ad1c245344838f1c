use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{hilbert_schmidt, path::euclidean, CoefficientSet, Segment};

/// Clamps every scalar component of `G`, `b` and `sigma` to `[-(m_r + 1), m_r + 1]`.
///
/// When `m_r` bounds the coefficients on the ball `||x||_inf <= r`, the
/// truncated set agrees with `coeffs` there. The result declares
/// `bound_m = d * (m_r + 1)` and keeps `kappa`, `L` and `L2`.
pub fn truncate_coeffs(coeffs: &CoefficientSet, r: f64, m_r: f64) -> Result<CoefficientSet> {
    if !(r > 0.0) {
        return Err(Error::NonPositiveR(r));
    }
    if !(m_r >= 0.0) || !m_r.is_finite() {
        return Err(Error::InvalidArgument(format!("m_R must be finite and >= 0, got {m_r}")));
    }
    let cap = m_r + 1.0;
    let clamp = move |out: &mut [f64]| {
        for x in out.iter_mut() {
            *x = x.clamp(-cap, cap);
        }
    };
    let (g, b, s) = (
        coeffs.neutral_fn().clone(),
        coeffs.drift_fn().clone(),
        coeffs.diffusion_fn().clone(),
    );
    let mut out = CoefficientSet::new(coeffs.dim())
        .with_neutral(move |x, o| {
            g(x, o);
            clamp(o);
        })
        .with_drift(move |x, o| {
            b(x, o);
            clamp(o);
        })
        .with_diffusion(move |x, o| {
            s(x, o);
            clamp(o);
        })
        .with_bound_m(coeffs.dim() as f64 * cap);
    out.kappa = coeffs.kappa;
    out.lip_l = coeffs.lip_l;
    out.growth_l2 = coeffs.growth_l2;
    Ok(out)
}

/// Sampled estimate of `m_R = sup_{||x|| <= r} max(|G|, |b|, ||sigma||_HS)` with a 10% margin.
///
/// Samples constant segments, random piecewise-constant segments, and segments
/// on the sphere `||x|| = r`, all with `slots` entries.
pub fn estimate_m_r(coeffs: &CoefficientSet, r: f64, slots: usize, samples: usize, seed: u64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::NonPositiveR(r));
    }
    let d = coeffs.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: f64 = 0.0;
    for trial in 0..samples.max(1) {
        let mut window = vec![0.0; slots * d];
        let scale = if trial % 2 == 0 { r } else { rng.random_range(0.0..=r) };
        let split = rng.random_range(0..slots);
        let mut a: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let mut b: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..=1.0)).collect();
        for v in [&mut a, &mut b] {
            let n = euclidean(v).max(f64::MIN_POSITIVE);
            v.iter_mut().for_each(|x| *x *= scale / n);
        }
        for s in 0..slots {
            let src = if trial % 3 == 0 || s < split { &a } else { &b };
            window[s * d..(s + 1) * d].copy_from_slice(src);
        }
        let seg = Segment::new(d, window)?;
        let v = seg.view();
        best = best
            .max(euclidean(&coeffs.eval_neutral(v)))
            .max(euclidean(&coeffs.eval_drift(v)))
            .max(hilbert_schmidt(&coeffs.eval_diffusion(v)));
    }
    Ok(1.1 * best)
}
