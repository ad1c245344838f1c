//! Shipped coefficient families.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::{AffineMap, AffineSpec, CoefficientSet};

/// Named coefficient presets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Preset {
    /// `G = 0`, `b = 0`, `sigma = I`.
    PureBrownian,
    /// `b(xi) = a * xi(-tau)`, `sigma = I`.
    LinearDelay { a: f64 },
    /// `G(xi) = kappa * xi(-tau)`, `b(xi) = -xi(0)`, `sigma = I`.
    NeutralLinear { kappa: f64 },
    /// `b(xi) = -xi(0)`, `sigma = I`.
    Ou,
    /// `G_i = 0.2 sin(xi_i(-tau))`, `b_i = -sin(xi_i(0))`,
    /// `sigma = diag(0.5 + 0.25 cos(xi_i(0)))`.
    BoundedTrig,
    /// `b_i = xi_i(0) - xi_i(0)^3`, `sigma = I`; unbounded drift.
    Superlinear,
}

pub const PRESET_NAMES: [&str; 6] = [
    "pure-brownian",
    "linear-delay",
    "neutral-linear",
    "ou",
    "bounded-trig",
    "superlinear",
];

const LINEAR_DELAY_A: f64 = -0.5;
const NEUTRAL_KAPPA: f64 = 0.5;

impl Preset {
    pub fn name(&self) -> &'static str {
        match self {
            Preset::PureBrownian => "pure-brownian",
            Preset::LinearDelay { .. } => "linear-delay",
            Preset::NeutralLinear { .. } => "neutral-linear",
            Preset::Ou => "ou",
            Preset::BoundedTrig => "bounded-trig",
            Preset::Superlinear => "superlinear",
        }
    }

    /// Affine description for the linear presets.
    pub fn affine(&self, dim: usize) -> Option<AffineSpec> {
        let eye = |c: f64| -> Vec<Vec<f64>> {
            (0..dim)
                .map(|i| (0..dim).map(|j| if i == j { c } else { 0.0 }).collect())
                .collect()
        };
        let map = |head: Option<f64>, delayed: Option<f64>| AffineMap {
            head: head.map(eye),
            delayed: delayed.map(eye),
            constant: None,
        };
        let (neutral, drift) = match *self {
            Preset::PureBrownian => (AffineMap::zero(), AffineMap::zero()),
            Preset::LinearDelay { a } => (AffineMap::zero(), map(None, Some(a))),
            Preset::NeutralLinear { kappa } => (map(None, Some(kappa)), map(Some(-1.0), None)),
            Preset::Ou => (AffineMap::zero(), map(Some(-1.0), None)),
            Preset::BoundedTrig | Preset::Superlinear => return None,
        };
        Some(AffineSpec {
            neutral,
            drift,
            diffusion: eye(1.0),
        })
    }

    pub fn build(&self, dim: usize) -> Result<CoefficientSet> {
        if dim == 0 {
            return Err(Error::NonPositiveInput("dim"));
        }
        if let Some(spec) = self.affine(dim) {
            return spec.to_coefficients();
        }
        let d = dim as f64;
        match self {
            Preset::BoundedTrig => CoefficientSet::new(dim)
                .with_neutral(|s, out| {
                    for (o, x) in out.iter_mut().zip(s.delayed()) {
                        *o = 0.2 * x.sin();
                    }
                })
                .with_drift(|s, out| {
                    for (o, x) in out.iter_mut().zip(s.head()) {
                        *o = -x.sin();
                    }
                })
                .with_diffusion(move |s, out| {
                    out.fill(0.0);
                    for (i, x) in s.head().iter().enumerate() {
                        out[i * dim + i] = 0.5 + 0.25 * x.cos();
                    }
                })
                .with_lip_l(2.4)
                .with_bound_m(d.sqrt())
                .with_growth_l2(d)
                .with_kappa(0.2),
            Preset::Superlinear => CoefficientSet::new(dim)
                .with_drift(|s, out| {
                    for (o, x) in out.iter_mut().zip(s.head()) {
                        *o = x - x * x * x;
                    }
                })
                .with_diffusion(move |_, out| {
                    out.fill(0.0);
                    for i in 0..dim {
                        out[i * dim + i] = 1.0;
                    }
                })
                .with_lip_l(2.0)
                .with_kappa(0.0),
            _ => unreachable!("affine presets handled above"),
        }
    }

    /// Upper bound on `|G|`, `|b|`, `||sigma||_HS` over `||x||_inf <= r`.
    pub fn sup_on_ball(&self, dim: usize, r: f64) -> Result<f64> {
        if let Some(spec) = self.affine(dim) {
            return spec.sup_on_ball(r);
        }
        let d = dim as f64;
        Ok(match self {
            Preset::BoundedTrig => d.sqrt(),
            Preset::Superlinear => {
                let drift = if dim == 1 {
                    scalar_cubic_sup(r)
                } else {
                    r + r * r * r
                };
                drift.max(d.sqrt())
            }
            _ => unreachable!("affine presets handled above"),
        })
    }
}

/// `sup_{|u| <= r} |u - u^3|`.
fn scalar_cubic_sup(r: f64) -> f64 {
    let crit = 1.0 / 3f64.sqrt();
    let inner = if r >= crit {
        crit - crit.powi(3)
    } else {
        r - r.powi(3)
    };
    inner.max(r * r * r - r)
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "pure-brownian" => Preset::PureBrownian,
            "linear-delay" => Preset::LinearDelay { a: LINEAR_DELAY_A },
            "neutral-linear" => Preset::NeutralLinear {
                kappa: NEUTRAL_KAPPA,
            },
            "ou" => Preset::Ou,
            "bounded-trig" => Preset::BoundedTrig,
            "superlinear" => Preset::Superlinear,
            other => return Err(Error::InvalidArgument(format!("unknown preset `{other}`"))),
        })
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{check_assumption, make_mesh, Assumption, PiecewiseLinearSampler};

    #[test]
    fn names_round_trip() {
        for name in PRESET_NAMES {
            let p: Preset = name.parse().unwrap();
            assert_eq!(p.name(), name);
            assert!(p.build(2).is_ok());
        }
        assert!("nope".parse::<Preset>().is_err());
    }

    #[test]
    fn declared_constants_survive_sampling() {
        let mesh = make_mesh(1.0, 1.0, 10).unwrap();
        for name in PRESET_NAMES {
            let c: CoefficientSet = name.parse::<Preset>().unwrap().build(2).unwrap();
            let sampler = PiecewiseLinearSampler::new(2, mesh.window_len());
            for which in [Assumption::H1, Assumption::H2, Assumption::H3] {
                match check_assumption(&c, which, &sampler, 200, 9) {
                    Ok(r) => assert!(r.passed, "{name} {which}: {}", r.worst_ratio),
                    Err(Error::MissingConstant(_)) => {}
                    Err(e) => panic!("{e}"),
                }
            }
        }
    }

    #[test]
    fn superlinear_violates_bound() {
        let c = Preset::Superlinear.build(1).unwrap().with_bound_m(1.0);
        let sampler = PiecewiseLinearSampler::new(1, 11);
        let r = check_assumption(&c, Assumption::H3, &sampler, 200, 2).unwrap();
        assert!(!r.passed);
    }

    #[test]
    fn cubic_sup() {
        assert!((scalar_cubic_sup(2.0) - 6.0).abs() < 1e-12);
        let brute = (0..=10_000)
            .map(|i| {
                let u = 1.2 * i as f64 / 10_000.0;
                (u - u * u * u).abs()
            })
            .fold(0.0, f64::max);
        assert!((scalar_cubic_sup(1.2) - brute).abs() < 1e-6);
    }
}
