use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::{AffineSpec, Segment, TimeMesh};
use crate::rate::{action, RateResult};
use crate::skeleton::ControlPath;

/// Path value `a + B u` as an affine function of the stacked control `u`.
#[derive(Clone)]
struct Affine {
    a: DVector<f64>,
    b: DMatrix<f64>,
}

/// Exact discrete minimizer of `L_T(h)` subject to `F(h)(T) = target` for
/// affine `G`, `b` and constant `sigma`.
///
/// Every mesh value of the skeleton is propagated explicitly as an affine
/// function of the control, so the endpoint constraint reads `B u = r` and
/// the least-norm solution is `u = B^T (B B^T)^{-1} r`.
pub fn qp_oracle_linear(spec: &AffineSpec, xi: &Segment, target: &[f64], mesh: &TimeMesh) -> Result<RateResult> {
    let d = spec.dim();
    if d == 0 {
        return Err(Error::NonPositiveInput("dim"));
    }
    for got in [xi.dim(), target.len()] {
        if got != d {
            return Err(Error::DimensionMismatch { expected: d, got });
        }
    }
    if xi.len() != mesh.window_len() {
        return Err(Error::DimensionMismatch {
            expected: mesh.window_len(),
            got: xi.len(),
        });
    }

    let sigma = DMatrix::from_row_slice(d, d, &spec.diffusion_dense()?);
    let sv = sigma.singular_values();
    if sv.min() <= 1e-12 * sv.max().max(f64::MIN_POSITIVE) {
        return Err(Error::SingularSigma);
    }
    let g = spec.neutral.dense(d)?;
    let b = spec.drift.dense(d)?;
    let mat = |m: &[f64]| DMatrix::from_row_slice(d, d, m);
    let (g_head, g_del, g_c) = (mat(&g.head), mat(&g.delayed), DVector::from_column_slice(&g.constant));
    let (b_head, b_del, b_c) = (mat(&b.head), mat(&b.delayed), DVector::from_column_slice(&b.constant));
    let solve_head = (DMatrix::identity(d, d) - &g_head)
        .try_inverse()
        .ok_or_else(|| Error::InvalidArgument("I - G_head is singular".into()))?;

    let (nh, nf, dt) = (mesh.n_history(), mesh.n_forward(), mesh.step());
    let cols = nf * d;
    let mut x: Vec<Affine> = (0..=nh)
        .map(|j| Affine {
            a: DVector::from_column_slice(xi.slot(j)),
            b: DMatrix::zeros(d, cols),
        })
        .collect();

    // m = x(t) - G(x_t)
    let mut m = Affine {
        a: &x[nh].a - &g_head * &x[nh].a - &g_del * &x[0].a - &g_c,
        b: DMatrix::zeros(d, cols),
    };
    let sigma_dt = &sigma * dt;
    for k in 0..nf {
        let (head, del) = (&x[k + nh], &x[k]);
        m.a += (&b_head * &head.a + &b_del * &del.a + &b_c) * dt;
        m.b += (&b_head * &head.b + &b_del * &del.b) * dt;
        let mut block = m.b.view_mut((0, k * d), (d, d));
        block += &sigma_dt;
        let del_next = &x[k + 1];
        let next = Affine {
            a: &solve_head * (&m.a + &g_del * &del_next.a + &g_c),
            b: &solve_head * (&m.b + &g_del * &del_next.b),
        };
        x.push(next);
    }

    let end = x.last().expect("mesh has an endpoint");
    let r = DVector::from_column_slice(target) - &end.a;
    let gram = &end.b * end.b.transpose();
    let y = gram.cholesky().ok_or(Error::SingularSigma)?.solve(&r);
    let u = end.b.transpose() * y;
    let residual = (&end.b * &u - &r).amax();

    let minimizer = ControlPath::from_hdot(mesh, d, u.as_slice().to_vec())?;
    Ok(RateResult {
        value: action(&minimizer),
        minimizer,
        constraint_residual: residual,
        iterations: 0,
        converged: true,
    })
}
