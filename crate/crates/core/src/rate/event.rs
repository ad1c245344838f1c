use crate::error::{Error, Result};
use crate::model::{PathTrajectory, TimeMesh};

/// Target sets for the rate function.
#[derive(Debug, Clone, PartialEq)]
pub enum EventSpec {
    /// `{ f : |f(T) - center| <= radius }`.
    EndpointBall { center: Vec<f64>, radius: f64 },
    /// `{ f : sup_t |f(t) - center(t)| <= radius }` over the whole mesh, history included.
    SupTube { center: PathTrajectory, radius: f64 },
    /// `{ f : <normal, f(T)> > level }`.
    EndpointHalfspace { normal: Vec<f64>, level: f64 },
}

impl EventSpec {
    pub fn validate(&self, mesh: &TimeMesh, dim: usize) -> Result<()> {
        let check_dim = |got: usize| {
            if got == dim {
                Ok(())
            } else {
                Err(Error::DimensionMismatch { expected: dim, got })
            }
        };
        match self {
            EventSpec::EndpointBall { center, radius } => {
                check_dim(center.len())?;
                positive_radius(*radius)
            }
            EventSpec::SupTube { center, radius } => {
                check_dim(center.dim())?;
                if center.mesh() != mesh {
                    return Err(Error::InvalidArgument("tube center lives on a different mesh".into()));
                }
                positive_radius(*radius)
            }
            EventSpec::EndpointHalfspace { normal, level } => {
                check_dim(normal.len())?;
                if !level.is_finite() || normal.iter().any(|x| !x.is_finite()) {
                    return Err(Error::InvalidArgument("non-finite half-space".into()));
                }
                if normal.iter().all(|x| *x == 0.0) {
                    return Err(Error::InvalidArgument("half-space normal is zero".into()));
                }
                Ok(())
            }
        }
    }

    pub fn contains(&self, path: &PathTrajectory) -> bool {
        match self {
            EventSpec::EndpointBall { center, radius } => dist(path.endpoint(), center) <= *radius,
            EventSpec::SupTube { center, radius } => path.sup_distance(center) <= *radius,
            EventSpec::EndpointHalfspace { normal, level } => dot(normal, path.endpoint()) > *level,
        }
    }

    /// Constraint values `g_j(f)`; the closure of the event is `{ g_j <= 0 for all j }`.
    /// Each `g_j` is a signed distance, so it carries the units of the path.
    pub fn constraints(&self, path: &PathTrajectory) -> Vec<f64> {
        match self {
            EventSpec::EndpointBall { center, radius } => vec![dist(path.endpoint(), center) - radius],
            EventSpec::SupTube { center, radius } => {
                let len = path.mesh().len();
                (0..len).map(|j| dist(path.value(j), center.value(j)) - radius).collect()
            }
            EventSpec::EndpointHalfspace { normal, level } => {
                let norm = dot(normal, normal).sqrt();
                vec![(level - dot(normal, path.endpoint())) / norm]
            }
        }
    }

    /// `max(0, max_j g_j(f))`.
    pub fn residual(&self, path: &PathTrajectory) -> f64 {
        self.constraints(path).into_iter().fold(0.0, f64::max)
    }
}

fn positive_radius(r: f64) -> Result<()> {
    if r > 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositiveInput("radius"))
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}
