use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::model::{AffineSpec, SegmentView};

/// `Segment -> R^d` functional writing into `out`.
pub type VectorFunctional = Arc<dyn Fn(SegmentView<'_>, &mut [f64]) + Send + Sync>;

/// `Segment -> R^{d x d}` functional writing a row-major matrix into `out`.
pub type MatrixFunctional = Arc<dyn Fn(SegmentView<'_>, &mut [f64]) + Send + Sync>;

/// Neutral term `G`, drift `b` and diffusion `sigma`, plus the declared constants.
///
/// Unset functionals are identically zero. `kappa` is the contraction constant
/// of `G`, `lip_l` the one-sided Lipschitz constant, `bound_m` the uniform bound
/// on `|b|` and `||sigma||_HS`, and `growth_l2` the linear-growth constant with
/// `|b|^2 v ||sigma||_HS^2 <= L2 (1 + ||xi||^2)`.
#[derive(Clone)]
pub struct CoefficientSet {
    dim: usize,
    neutral: VectorFunctional,
    drift: VectorFunctional,
    diffusion: MatrixFunctional,
    pub kappa: Option<f64>,
    pub lip_l: Option<f64>,
    pub bound_m: Option<f64>,
    pub growth_l2: Option<f64>,
    affine: Option<Arc<AffineSpec>>,
}

impl CoefficientSet {
    pub fn new(dim: usize) -> Self {
        let zero: VectorFunctional = Arc::new(|_, out: &mut [f64]| out.fill(0.0));
        Self {
            dim,
            neutral: zero.clone(),
            drift: zero.clone(),
            diffusion: zero,
            kappa: None,
            lip_l: None,
            bound_m: None,
            growth_l2: None,
            affine: None,
        }
    }

    pub fn with_neutral<F>(mut self, g: F) -> Self
    where
        F: Fn(SegmentView<'_>, &mut [f64]) + Send + Sync + 'static,
    {
        self.neutral = Arc::new(g);
        self.affine = None;
        self
    }

    pub fn with_drift<F>(mut self, b: F) -> Self
    where
        F: Fn(SegmentView<'_>, &mut [f64]) + Send + Sync + 'static,
    {
        self.drift = Arc::new(b);
        self.affine = None;
        self
    }

    pub fn with_diffusion<F>(mut self, sigma: F) -> Self
    where
        F: Fn(SegmentView<'_>, &mut [f64]) + Send + Sync + 'static,
    {
        self.diffusion = Arc::new(sigma);
        self.affine = None;
        self
    }

    /// Declares the contraction constant of `G`; must lie in `[0, 1)`.
    pub fn with_kappa(mut self, kappa: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&kappa) {
            return Err(Error::InvalidArgument(format!(
                "kappa must lie in [0, 1), got {kappa}"
            )));
        }
        self.kappa = Some(kappa);
        Ok(self)
    }

    pub fn with_lip_l(mut self, l: f64) -> Self {
        self.lip_l = Some(l);
        self
    }

    pub fn with_bound_m(mut self, m: f64) -> Self {
        self.bound_m = Some(m);
        self
    }

    pub fn with_growth_l2(mut self, l2: f64) -> Self {
        self.growth_l2 = Some(l2);
        self
    }

    pub(crate) fn with_affine(mut self, spec: AffineSpec) -> Self {
        self.affine = Some(Arc::new(spec));
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The affine description these coefficients were built from, if any.
    pub fn affine(&self) -> Option<&AffineSpec> {
        self.affine.as_deref()
    }

    pub fn neutral_fn(&self) -> &VectorFunctional {
        &self.neutral
    }

    pub fn drift_fn(&self) -> &VectorFunctional {
        &self.drift
    }

    pub fn diffusion_fn(&self) -> &MatrixFunctional {
        &self.diffusion
    }

    pub fn eval_neutral(&self, s: SegmentView<'_>) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        (self.neutral)(s, &mut out);
        out
    }

    pub fn eval_drift(&self, s: SegmentView<'_>) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        (self.drift)(s, &mut out);
        out
    }

    pub fn eval_diffusion(&self, s: SegmentView<'_>) -> Vec<f64> {
        let mut out = vec![0.0; self.dim * self.dim];
        (self.diffusion)(s, &mut out);
        out
    }
}

impl fmt::Debug for CoefficientSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CoefficientSet")
            .field("dim", &self.dim)
            .field("kappa", &self.kappa)
            .field("lip_l", &self.lip_l)
            .field("bound_m", &self.bound_m)
            .field("growth_l2", &self.growth_l2)
            .field("affine", &self.affine.is_some())
            .finish_non_exhaustive()
    }
}

/// Hilbert-Schmidt (Frobenius) norm of a row-major matrix.
pub fn hilbert_schmidt(m: &[f64]) -> f64 {
    m.iter().map(|x| x * x).sum::<f64>().sqrt()
}
