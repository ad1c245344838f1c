use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CoefficientSet, Segment, TimeMesh};
use crate::rate::{action, EventSpec};
use crate::sim::{GaussianStream, NoiseSeed, DEFAULT_NEUTRAL_TOL};
use crate::skeleton::{solve_skeleton, truncate_coeffs, ControlPath};

/// Tuning of the augmented-Lagrangian search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RateOptions {
    pub starts: usize,
    pub penalty_start: f64,
    pub penalty_max: f64,
    pub residual_tol: f64,
    pub relative_tol: f64,
    pub fd_step: f64,
    pub max_outer: usize,
    pub max_inner: usize,
    pub seed: u64,
    pub neutral_tol: f64,
}

impl Default for RateOptions {
    fn default() -> Self {
        Self {
            starts: 8,
            penalty_start: 10.0,
            penalty_max: 1e5,
            residual_tol: 1e-6,
            relative_tol: 1e-8,
            fd_step: 1e-6,
            max_outer: 60,
            max_inner: 50,
            seed: 0,
            neutral_tol: DEFAULT_NEUTRAL_TOL,
        }
    }
}

impl RateOptions {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            (self.penalty_start, "penalty_start"),
            (self.penalty_max, "penalty_max"),
            (self.residual_tol, "residual_tol"),
            (self.relative_tol, "relative_tol"),
            (self.fd_step, "fd_step"),
            (self.neutral_tol, "neutral_tol"),
        ];
        for (v, name) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::NonPositiveInput(name));
            }
        }
        if self.starts == 0 {
            return Err(Error::NonPositiveInput("starts"));
        }
        if self.max_outer == 0 || self.max_inner == 0 {
            return Err(Error::NonPositiveInput("iterations"));
        }
        if self.penalty_max < self.penalty_start {
            return Err(Error::InvalidArgument("penalty_max below penalty_start".into()));
        }
        Ok(())
    }
}

/// Best control found for an event.
#[derive(Debug, Clone, PartialEq)]
pub struct RateResult {
    /// `action(minimizer)`, recomputed from the control.
    pub value: f64,
    pub minimizer: ControlPath,
    /// `max(0, max_j g_j)` at the minimizer.
    pub constraint_residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Outcome of [`fd_gradient_check`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdCheck {
    pub max_relative_error: f64,
    pub gradient_norm: f64,
}

struct Problem<'a> {
    coeffs: &'a CoefficientSet,
    xi: &'a Segment,
    event: &'a EventSpec,
    mesh: TimeMesh,
    tol: f64,
    fd_step: f64,
}

struct StartOutcome {
    u: Vec<f64>,
    residual: f64,
    iterations: usize,
    converged: bool,
}

impl Problem<'_> {
    fn control(&self, u: &[f64]) -> ControlPath {
        ControlPath::from_hdot(&self.mesh, self.coeffs.dim(), u.to_vec()).expect("control length fixed by mesh")
    }

    fn constraints(&self, u: &[f64]) -> Result<Vec<f64>> {
        let path = solve_skeleton(self.coeffs, self.xi, &self.control(u), self.tol)?;
        Ok(self.event.constraints(&path))
    }

    fn action(&self, u: &[f64]) -> f64 {
        action(&self.control(u))
    }

    fn merit(&self, u: &[f64], lam: &[f64], mu: f64) -> Result<f64> {
        let g = self.constraints(u)?;
        Ok(merit(self.action(u), &g, lam, mu))
    }

    /// `dg_j / du_c` by central differences, one skeleton pair per column.
    fn jacobian(&self, u: &[f64]) -> Result<DMatrix<f64>> {
        let h = self.fd_step;
        let cols = (0..u.len())
            .into_par_iter()
            .map(|c| {
                let mut v = u.to_vec();
                v[c] = u[c] + h;
                let plus = self.constraints(&v)?;
                v[c] = u[c] - h;
                let minus = self.constraints(&v)?;
                Ok(plus.iter().zip(&minus).map(|(p, m)| (p - m) / (2.0 * h)).collect::<Vec<f64>>())
            })
            .collect::<Result<Vec<_>>>()?;
        let rows = cols.first().map_or(0, Vec::len);
        Ok(DMatrix::from_fn(rows, u.len(), |j, c| cols[c][j]))
    }

    fn gradient(&self, u: &[f64], g: &[f64], jac: &DMatrix<f64>, lam: &[f64], mu: f64) -> (DVector<f64>, Vec<f64>) {
        let dt = self.mesh.step();
        let weights: Vec<f64> = lam.iter().zip(g).map(|(l, gj)| (l + mu * gj).max(0.0)).collect();
        let grad = DVector::from_iterator(u.len(), u.iter().map(|x| dt * x))
            + jac.transpose() * DVector::from_column_slice(&weights);
        (grad, weights)
    }

    /// Minimizes the augmented Lagrangian at fixed `(lam, mu)` with Gauss-Newton
    /// preconditioned descent and Armijo backtracking. Returns the iteration count.
    fn inner(&self, u: &mut Vec<f64>, lam: &[f64], mu: f64, max_inner: usize) -> Result<usize> {
        let dt = self.mesh.step();
        let mut g = self.constraints(u)?;
        let mut phi = merit(self.action(u), &g, lam, mu);
        for it in 0..max_inner {
            let jac = self.jacobian(u)?;
            let (grad, weights) = self.gradient(u, &g, &jac, lam, mu);
            let active: Vec<usize> = (0..weights.len()).filter(|&j| weights[j] > 0.0).collect();
            // (dt I + mu J_a^T J_a)^{-1} grad through the small active-set system
            let p = if active.is_empty() {
                -&grad / dt
            } else {
                let ja = jac.select_rows(active.iter());
                let mut small = &ja * ja.transpose();
                for i in 0..active.len() {
                    small[(i, i)] += dt / mu;
                }
                let rhs = &ja * &grad;
                let y = small
                    .cholesky()
                    .map(|c| c.solve(&rhs))
                    .ok_or_else(|| Error::InvalidArgument("penalty system not positive definite".into()))?;
                -(&grad - ja.transpose() * y) / dt
            };
            let slope = grad.dot(&p);
            if !(slope < 0.0) {
                return Ok(it);
            }
            let mut t = 1.0;
            let mut accepted = None;
            for _ in 0..40 {
                let trial: Vec<f64> = u.iter().zip(p.iter()).map(|(x, pi)| x + t * pi).collect();
                if let Ok(gt) = self.constraints(&trial) {
                    let phit = merit(self.action(&trial), &gt, lam, mu);
                    if phit.is_finite() && phit <= phi + 1e-4 * t * slope {
                        accepted = Some((trial, gt, phit));
                        break;
                    }
                }
                t *= 0.5;
            }
            let Some((trial, gt, phit)) = accepted else {
                return Ok(it);
            };
            let moved = t * p.amax();
            let scale = 1.0 + u.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            let decrease = phi - phit;
            *u = trial;
            g = gt;
            phi = phit;
            if moved <= 1e-10 * scale || decrease <= 1e-15 * (1.0 + phi.abs()) {
                return Ok(it + 1);
            }
        }
        Ok(max_inner)
    }

    fn run_start(&self, mut u: Vec<f64>, opts: &RateOptions) -> Result<StartOutcome> {
        let mut lam = vec![0.0; self.constraints(&u)?.len()];
        let mut mu = opts.penalty_start;
        let mut iterations = 0;
        let mut previous: Option<f64> = None;
        let mut converged = false;
        for _ in 0..opts.max_outer {
            iterations += self.inner(&mut u, &lam, mu, opts.max_inner)?;
            let g = self.constraints(&u)?;
            let residual = max_residual(&g);
            let a = self.action(&u);
            if let Some(p) = previous {
                if residual <= opts.residual_tol && (a - p).abs() <= opts.relative_tol * a.abs().max(p.abs()) {
                    converged = true;
                    break;
                }
            }
            previous = Some(a);
            for (l, gj) in lam.iter_mut().zip(&g) {
                *l = (*l + mu * gj).max(0.0);
            }
            mu = (2.0 * mu).min(opts.penalty_max);
        }
        let residual = max_residual(&self.constraints(&u)?);
        Ok(StartOutcome {
            u,
            residual,
            iterations,
            converged: converged && residual <= opts.residual_tol,
        })
    }
}

fn merit(action: f64, g: &[f64], lam: &[f64], mu: f64) -> f64 {
    action
        + g.iter()
            .zip(lam)
            .map(|(gj, l)| ((l + mu * gj).max(0.0).powi(2) - l * l) / (2.0 * mu))
            .sum::<f64>()
}

fn max_residual(g: &[f64]) -> f64 {
    g.iter().fold(0.0, |m, x| m.max(*x))
}

fn initial_control(mesh: &TimeMesh, dim: usize, seed: u64, start: usize) -> Vec<f64> {
    let n = mesh.n_forward();
    if start == 0 {
        return vec![0.0; n * dim];
    }
    let mut z = GaussianStream::new(NoiseSeed::new(seed, start as u64));
    let coef: Vec<[f64; 3]> = (0..dim)
        .map(|_| [z.next_standard(), z.next_standard(), z.next_standard()])
        .collect();
    let w = std::f64::consts::PI / mesh.horizon();
    let mut u = Vec::with_capacity(n * dim);
    for k in 0..n {
        let t = mesh.forward_time(k) + 0.5 * mesh.step();
        for c in &coef {
            u.push(c[0] + c[1] * (w * t).sin() + c[2] * (w * t).cos());
        }
    }
    u
}

fn check_inputs(coeffs: &CoefficientSet, xi: &Segment, event: &EventSpec, mesh: &TimeMesh) -> Result<()> {
    let d = coeffs.dim();
    if xi.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, got: xi.dim() });
    }
    if xi.len() != mesh.window_len() {
        return Err(Error::DimensionMismatch {
            expected: mesh.window_len(),
            got: xi.len(),
        });
    }
    event.validate(mesh, d)
}

/// Upper bound on `inf { L_T(h) : F(h) in closure(event) }` by multi-start
/// augmented-Lagrangian descent over piecewise-constant `hdot`.
///
/// Constraint gradients are central finite differences of the skeleton map.
/// Non-convergence is reported through `converged`, not as an error.
pub fn rate_for_event(
    coeffs: &CoefficientSet,
    xi: &Segment,
    event: &EventSpec,
    mesh: &TimeMesh,
    opts: &RateOptions,
) -> Result<RateResult> {
    opts.validate()?;
    check_inputs(coeffs, xi, event, mesh)?;
    let problem = Problem {
        coeffs,
        xi,
        event,
        mesh: *mesh,
        tol: opts.neutral_tol,
        fd_step: opts.fd_step,
    };
    let d = coeffs.dim();
    let outcomes: Vec<Result<StartOutcome>> = (0..opts.starts)
        .into_par_iter()
        .map(|s| problem.run_start(initial_control(mesh, d, opts.seed, s), opts))
        .collect();

    let mut best: Option<(usize, StartOutcome, f64)> = None;
    let mut first_err = None;
    for (idx, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok(o) => {
                let value = problem.action(&o.u);
                let better = match &best {
                    None => true,
                    Some((_, b, bv)) => (o.converged && !b.converged) || (o.converged == b.converged && value < *bv),
                };
                if better {
                    best = Some((idx, o, value));
                }
            }
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    let Some((_, o, _)) = best else {
        return Err(first_err.expect("at least one start"));
    };
    let minimizer = problem.control(&o.u);
    Ok(RateResult {
        value: action(&minimizer),
        minimizer,
        constraint_residual: o.residual,
        iterations: o.iterations,
        converged: o.converged,
    })
}

/// [`rate_for_event`] for the truncated skeleton `F^R`.
pub fn rate_for_event_truncated(
    coeffs: &CoefficientSet,
    r: f64,
    m_r: f64,
    xi: &Segment,
    event: &EventSpec,
    mesh: &TimeMesh,
    opts: &RateOptions,
) -> Result<RateResult> {
    let truncated = truncate_coeffs(coeffs, r, m_r)?;
    rate_for_event(&truncated, xi, event, mesh, opts)
}

/// Compares the optimizer's gradient of the penalized objective (multipliers
/// zero, penalty `opts.penalty_start`) with central differences of the
/// objective itself at steps `1e-4` and `1e-5`.
pub fn fd_gradient_check(
    coeffs: &CoefficientSet,
    xi: &Segment,
    event: &EventSpec,
    h0: &ControlPath,
    opts: &RateOptions,
) -> Result<FdCheck> {
    opts.validate()?;
    let mesh = *h0.mesh();
    check_inputs(coeffs, xi, event, &mesh)?;
    if h0.dim() != coeffs.dim() {
        return Err(Error::DimensionMismatch {
            expected: coeffs.dim(),
            got: h0.dim(),
        });
    }
    let problem = Problem {
        coeffs,
        xi,
        event,
        mesh,
        tol: opts.neutral_tol,
        fd_step: opts.fd_step,
    };
    let u = h0.hdot().to_vec();
    let mu = opts.penalty_start;
    let lam = vec![0.0; problem.constraints(&u)?.len()];
    let g = problem.constraints(&u)?;
    let jac = problem.jacobian(&u)?;
    let (grad, _) = problem.gradient(&u, &g, &jac, &lam, mu);

    let mut worst: f64 = 0.0;
    for step in [1e-4, 1e-5] {
        let fd = (0..u.len())
            .into_par_iter()
            .map(|c| {
                let mut v = u.clone();
                v[c] = u[c] + step;
                let plus = problem.merit(&v, &lam, mu)?;
                v[c] = u[c] - step;
                let minus = problem.merit(&v, &lam, mu)?;
                Ok((plus - minus) / (2.0 * step))
            })
            .collect::<Result<Vec<f64>>>()?;
        let fd = DVector::from_vec(fd);
        let scale = grad.amax().max(fd.amax());
        if scale > 0.0 {
            worst = worst.max((&grad - fd).amax() / scale);
        }
    }
    Ok(FdCheck {
        max_relative_error: worst,
        gradient_norm: grad.norm(),
    })
}
