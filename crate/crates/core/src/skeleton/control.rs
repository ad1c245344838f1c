use crate::error::{Error, Result};
use crate::model::TimeMesh;
use crate::sim::{GaussianStream, NoiseSeed};

/// Discrete Cameron-Martin control: `hdot` is constant on each forward mesh step
/// and `h(t_k) = sum_{j<k} hdot_j * step`, so `h(0) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlPath {
    mesh: TimeMesh,
    dim: usize,
    hdot: Vec<f64>,
}

impl ControlPath {
    pub fn zeros(mesh: &TimeMesh, dim: usize) -> Self {
        Self {
            mesh: *mesh,
            dim,
            hdot: vec![0.0; mesh.n_forward() * dim],
        }
    }

    /// `hdot == value` on every step.
    pub fn constant(mesh: &TimeMesh, value: &[f64]) -> Self {
        let hdot = value
            .iter()
            .copied()
            .cycle()
            .take(value.len() * mesh.n_forward())
            .collect();
        Self {
            mesh: *mesh,
            dim: value.len(),
            hdot,
        }
    }

    pub fn from_hdot(mesh: &TimeMesh, dim: usize, hdot: Vec<f64>) -> Result<Self> {
        if hdot.len() != mesh.n_forward() * dim {
            return Err(Error::DimensionMismatch {
                expected: mesh.n_forward() * dim,
                got: hdot.len(),
            });
        }
        Ok(Self {
            mesh: *mesh,
            dim,
            hdot,
        })
    }

    /// `hdot` on step `k` is `f(t_k)`.
    pub fn from_fn(mesh: &TimeMesh, dim: usize, f: impl Fn(f64) -> Vec<f64>) -> Result<Self> {
        let mut hdot = Vec::with_capacity(mesh.n_forward() * dim);
        for k in 0..mesh.n_forward() {
            let v = f(mesh.forward_time(k));
            if v.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: v.len(),
                });
            }
            hdot.extend_from_slice(&v);
        }
        Self::from_hdot(mesh, dim, hdot)
    }

    /// Random-walk control `hdot_k = scale * Z_k / sqrt(step)`; `h` is a `scale`-Brownian path sampled on the mesh.
    pub fn rough(mesh: &TimeMesh, dim: usize, scale: f64, seed: NoiseSeed) -> Self {
        let mut stream = GaussianStream::new(seed);
        let c = scale / mesh.step().sqrt();
        let hdot = (0..mesh.n_forward() * dim)
            .map(|_| c * stream.next_standard())
            .collect();
        Self {
            mesh: *mesh,
            dim,
            hdot,
        }
    }

    pub fn mesh(&self) -> &TimeMesh {
        &self.mesh
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn hdot(&self) -> &[f64] {
        &self.hdot
    }

    pub fn hdot_mut(&mut self) -> &mut [f64] {
        &mut self.hdot
    }

    pub fn into_hdot(self) -> Vec<f64> {
        self.hdot
    }

    pub fn hdot_at(&self, k: usize) -> &[f64] {
        &self.hdot[k * self.dim..(k + 1) * self.dim]
    }

    /// `h(t_k)` for forward index `k`.
    pub fn h_at(&self, k: usize) -> Vec<f64> {
        let dt = self.mesh.step();
        let mut h = vec![0.0; self.dim];
        for step in self.hdot[..k * self.dim].chunks_exact(self.dim) {
            for (hi, v) in h.iter_mut().zip(step) {
                *hi += v * dt;
            }
        }
        h
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            hdot: self.hdot.iter().map(|v| c * v).collect(),
            ..self.clone()
        }
    }

    pub fn plus(&self, other: &ControlPath) -> Result<Self> {
        if self.hdot.len() != other.hdot.len() {
            return Err(Error::DimensionMismatch {
                expected: self.hdot.len(),
                got: other.hdot.len(),
            });
        }
        Ok(Self {
            hdot: self.hdot.iter().zip(&other.hdot).map(|(a, b)| a + b).collect(),
            ..self.clone()
        })
    }
}
