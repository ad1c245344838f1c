use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{hilbert_schmidt, CoefficientSet, SegmentView};

/// `x -> head * x(0) + delayed * x(-tau) + constant`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AffineMap {
    #[serde(default)]
    pub head: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub delayed: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub constant: Option<Vec<f64>>,
}

/// Affine-in-segment coefficients with constant diffusion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AffineSpec {
    #[serde(default = "AffineMap::zero")]
    pub neutral: AffineMap,
    #[serde(default = "AffineMap::zero")]
    pub drift: AffineMap,
    pub diffusion: Vec<Vec<f64>>,
}

/// Dense row-major form of an [`AffineMap`] at a fixed dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseAffine {
    pub dim: usize,
    pub head: Vec<f64>,
    pub delayed: Vec<f64>,
    pub constant: Vec<f64>,
}

impl DenseAffine {
    pub fn apply(&self, s: SegmentView<'_>, out: &mut [f64]) {
        let d = self.dim;
        let (x0, xd) = (s.head(), s.delayed());
        for i in 0..d {
            let row = i * d..(i + 1) * d;
            let mut acc = self.constant[i];
            for (j, (h, l)) in self.head[row.clone()].iter().zip(&self.delayed[row]).enumerate() {
                acc += h * x0[j] + l * xd[j];
            }
            out[i] = acc;
        }
    }

    /// Lipschitz constant with respect to the uniform norm: `||head||_2 + ||delayed||_2`.
    pub fn lipschitz(&self) -> f64 {
        spectral_norm(&self.head, self.dim) + spectral_norm(&self.delayed, self.dim)
    }

    pub fn constant_norm(&self) -> f64 {
        hilbert_schmidt(&self.constant)
    }
}

impl AffineMap {
    pub fn zero() -> Self {
        Self {
            head: None,
            delayed: None,
            constant: None,
        }
    }

    pub fn dense(&self, dim: usize) -> Result<DenseAffine> {
        Ok(DenseAffine {
            dim,
            head: dense_matrix(self.head.as_deref(), dim)?,
            delayed: dense_matrix(self.delayed.as_deref(), dim)?,
            constant: match &self.constant {
                None => vec![0.0; dim],
                Some(c) if c.len() == dim => c.clone(),
                Some(c) => {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        got: c.len(),
                    })
                }
            },
        })
    }
}

impl AffineSpec {
    pub fn dim(&self) -> usize {
        self.diffusion.len()
    }

    pub fn diffusion_dense(&self) -> Result<Vec<f64>> {
        dense_matrix(Some(&self.diffusion), self.dim())
    }

    /// Builds the coefficient functionals and declares the constants implied by the matrices.
    pub fn to_coefficients(&self) -> Result<CoefficientSet> {
        let d = self.dim();
        if d == 0 {
            return Err(Error::NonPositiveInput("dim"));
        }
        let g = self.neutral.dense(d)?;
        let b = self.drift.dense(d)?;
        let sigma = self.diffusion_dense()?;

        let kappa = g.lipschitz();
        let b_lip = b.lipschitz();
        let sigma_hs = hilbert_schmidt(&sigma);
        let growth_l2 = (2.0 * b_lip * b_lip)
            .max(2.0 * b.constant_norm().powi(2))
            .max(sigma_hs * sigma_hs);

        let (gc, bc) = (g.clone(), b.clone());
        let mut set = CoefficientSet::new(d)
            .with_neutral(move |s, out| gc.apply(s, out))
            .with_drift(move |s, out| bc.apply(s, out))
            .with_diffusion(move |_, out| out.copy_from_slice(&sigma))
            .with_lip_l(2.0 * (1.0 + kappa) * b_lip)
            .with_growth_l2(growth_l2);
        if kappa < 1.0 {
            set.kappa = Some(kappa);
        }
        if b_lip == 0.0 {
            set.bound_m = Some(b.constant_norm().max(sigma_hs));
        }
        Ok(set.with_affine(self.clone()))
    }

    /// Upper bound on `|G|`, `|b|` and `||sigma||_HS` over the ball `||x|| <= r`.
    pub fn sup_on_ball(&self, r: f64) -> Result<f64> {
        let d = self.dim();
        let g = self.neutral.dense(d)?;
        let b = self.drift.dense(d)?;
        let sigma = hilbert_schmidt(&self.diffusion_dense()?);
        Ok((g.lipschitz() * r + g.constant_norm())
            .max(b.lipschitz() * r + b.constant_norm())
            .max(sigma))
    }
}

fn spectral_norm(m: &[f64], dim: usize) -> f64 {
    if m.iter().all(|x| *x == 0.0) {
        return 0.0;
    }
    nalgebra::DMatrix::from_row_slice(dim, dim, m)
        .singular_values()
        .max()
}

fn dense_matrix(rows: Option<&[Vec<f64>]>, dim: usize) -> Result<Vec<f64>> {
    let Some(rows) = rows else {
        return Ok(vec![0.0; dim * dim]);
    };
    if rows.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: rows.len(),
        });
    }
    let mut out = Vec::with_capacity(dim * dim);
    for row in rows {
        if row.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: row.len(),
            });
        }
        out.extend_from_slice(row);
    }
    Ok(out)
}
