use crate::error::{Error, Result};
use crate::model::TimeMesh;

/// Borrowed window of `d`-vectors over `[-tau, 0]`, stored slot-major.
///
/// Slot `0` is `theta = -tau`, the last slot is the head `theta = 0`.
#[derive(Debug, Clone, Copy)]
pub struct SegmentView<'a> {
    dim: usize,
    data: &'a [f64],
}

impl<'a> SegmentView<'a> {
    pub fn new(dim: usize, data: &'a [f64]) -> Self {
        debug_assert!(dim > 0 && data.len() % dim == 0 && !data.is_empty());
        Self { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of slots in the window.
    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn slot(&self, k: usize) -> &'a [f64] {
        &self.data[k * self.dim..(k + 1) * self.dim]
    }

    /// Value at `theta = 0`.
    pub fn head(&self) -> &'a [f64] {
        self.slot(self.len() - 1)
    }

    /// Value at `theta = -tau`.
    pub fn delayed(&self) -> &'a [f64] {
        self.slot(0)
    }

    pub fn slots(&self) -> impl Iterator<Item = &'a [f64]> + 'a {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_slice(&self) -> &'a [f64] {
        self.data
    }

    /// `max_theta |x(theta)|` with the Euclidean norm on each slot.
    pub fn uniform_norm(&self) -> f64 {
        self.slots().map(euclidean).fold(0.0, f64::max)
    }

    pub fn to_segment(&self) -> Segment {
        Segment {
            dim: self.dim,
            window: self.data.to_vec(),
        }
    }
}

/// Owned segment `f_t(theta) = f(t + theta)` on the mesh lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    dim: usize,
    window: Vec<f64>,
}

impl Segment {
    /// Builds a segment from slot-major values; `window.len()` must be a positive multiple of `dim`.
    pub fn new(dim: usize, window: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::NonPositiveInput("dim"));
        }
        if window.is_empty() || window.len() % dim != 0 {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: window.len(),
            });
        }
        Ok(Self { dim, window })
    }

    pub fn constant(mesh: &TimeMesh, value: &[f64]) -> Self {
        let window = value
            .iter()
            .copied()
            .cycle()
            .take(value.len() * mesh.window_len())
            .collect();
        Self {
            dim: value.len(),
            window,
        }
    }

    pub fn zeros(mesh: &TimeMesh, dim: usize) -> Self {
        Self::constant(mesh, &vec![0.0; dim])
    }

    /// Samples `f(theta)` at each lattice point of `[-tau, 0]`.
    pub fn from_fn(mesh: &TimeMesh, dim: usize, f: impl Fn(f64) -> Vec<f64>) -> Result<Self> {
        let mut window = Vec::with_capacity(dim * mesh.window_len());
        for j in 0..mesh.window_len() {
            let value = f(mesh.time(j));
            if value.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: value.len(),
                });
            }
            window.extend_from_slice(&value);
        }
        Ok(Self { dim, window })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.window.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.window.is_empty()
    }

    pub fn view(&self) -> SegmentView<'_> {
        SegmentView::new(self.dim, &self.window)
    }

    pub fn slot(&self, k: usize) -> &[f64] {
        &self.window[k * self.dim..(k + 1) * self.dim]
    }

    pub fn head(&self) -> &[f64] {
        self.slot(self.len() - 1)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.window
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.window
    }

    pub fn uniform_norm(&self) -> f64 {
        self.view().uniform_norm()
    }

    /// Slot-wise difference `self - other`.
    pub fn difference(&self, other: &Segment) -> Result<Segment> {
        if self.dim != other.dim || self.window.len() != other.window.len() {
            return Err(Error::DimensionMismatch {
                expected: self.window.len(),
                got: other.window.len(),
            });
        }
        let window = self
            .window
            .iter()
            .zip(&other.window)
            .map(|(a, b)| a - b)
            .collect();
        Ok(Segment {
            dim: self.dim,
            window,
        })
    }
}

/// Uniform norm of a segment: the largest Euclidean norm over its slots.
pub fn uniform_norm(s: &Segment) -> f64 {
    s.uniform_norm()
}

/// A `d`-dimensional path on the full mesh `[-tau, T]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathTrajectory {
    mesh: TimeMesh,
    dim: usize,
    values: Vec<f64>,
}

impl PathTrajectory {
    /// Path whose history equals `xi` and whose forward part is zero-filled.
    pub fn from_initial(mesh: &TimeMesh, xi: &Segment) -> Result<Self> {
        if xi.len() != mesh.window_len() {
            return Err(Error::DimensionMismatch {
                expected: mesh.window_len(),
                got: xi.len(),
            });
        }
        let mut values = vec![0.0; mesh.len() * xi.dim()];
        values[..xi.as_slice().len()].copy_from_slice(xi.as_slice());
        Ok(Self {
            mesh: *mesh,
            dim: xi.dim(),
            values,
        })
    }

    /// Samples `f(t)` at every mesh point of `[-tau, T]`.
    pub fn from_fn(mesh: &TimeMesh, dim: usize, f: impl Fn(f64) -> Vec<f64>) -> Result<Self> {
        let mut values = Vec::with_capacity(mesh.len() * dim);
        for j in 0..mesh.len() {
            let v = f(mesh.time(j));
            if v.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: v.len(),
                });
            }
            values.extend_from_slice(&v);
        }
        Ok(Self {
            mesh: *mesh,
            dim,
            values,
        })
    }

    pub fn mesh(&self) -> &TimeMesh {
        &self.mesh
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Value at global index `j` (time `mesh.time(j)`).
    pub fn value(&self, j: usize) -> &[f64] {
        &self.values[j * self.dim..(j + 1) * self.dim]
    }

    /// Value at forward index `k` (time `k * step`).
    pub fn at(&self, k: usize) -> &[f64] {
        self.value(k + self.mesh.n_history())
    }

    /// Value at the horizon `T`.
    pub fn endpoint(&self) -> &[f64] {
        self.value(self.mesh.len() - 1)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Borrowed segment at forward index `k`; panics when out of range.
    pub fn window(&self, k: usize) -> SegmentView<'_> {
        let w = self.mesh.window_len() * self.dim;
        SegmentView::new(self.dim, &self.values[k * self.dim..k * self.dim + w])
    }

    pub fn initial_segment(&self) -> Segment {
        self.window(0).to_segment()
    }

    /// Copy of the segment at forward index `t_index`.
    pub fn segment_at(&self, t_index: i64) -> Result<Segment> {
        let max = self.mesh.n_forward();
        if t_index < 0 || t_index as usize > max {
            return Err(Error::IndexOutOfRange {
                index: t_index,
                max,
            });
        }
        Ok(self.window(t_index as usize).to_segment())
    }

    /// `sup_t |self(t)|` over `[-tau, T]`.
    pub fn sup_norm(&self) -> f64 {
        self.values
            .chunks_exact(self.dim)
            .map(euclidean)
            .fold(0.0, f64::max)
    }

    /// `sup_t |self(t) - other(t)|` over `[-tau, T]`.
    pub fn sup_distance(&self, other: &PathTrajectory) -> f64 {
        debug_assert_eq!(self.values.len(), other.values.len());
        self.values
            .chunks_exact(self.dim)
            .zip(other.values.chunks_exact(self.dim))
            .map(|(a, b)| {
                a.iter()
                    .zip(b)
                    .map(|(x, y)| (x - y) * (x - y))
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max)
    }
}

/// Segment of `path` at forward index `t_index`.
pub fn segment_at(path: &PathTrajectory, t_index: i64) -> Result<Segment> {
    path.segment_at(t_index)
}

pub(crate) fn euclidean(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}
