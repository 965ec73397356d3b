use serde::{Deserialize, Serialize};

use super::quadrature::grid_size;
use crate::error::{Error, Result};

/// Tensor-grid Gauss-Hermite is only used up to this parameter dimension.
pub const MAX_TENSOR_GRID_DIM: usize = 4;

/// How moment-matching integrals over a Gaussian are approximated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MomentScheme {
    /// `samples` i.i.d. draws from the current approximation.
    MonteCarlo { samples: usize },
    /// `points` Gauss-Hermite nodes per dimension (tensor grid).
    GaussHermite { points: usize },
    /// The 2p unscented points.
    Unscented,
}

impl Default for MomentScheme {
    fn default() -> Self {
        MomentScheme::GaussHermite { points: 7 }
    }
}

impl MomentScheme {
    pub fn validate(&self) -> Result<()> {
        match *self {
            MomentScheme::MonteCarlo { samples: 0 } => {
                Err(Error::Config("monte carlo scheme needs at least one sample".into()))
            }
            MomentScheme::GaussHermite { points: 0 } => {
                Err(Error::Config("gauss-hermite scheme needs at least one point".into()))
            }
            _ => Ok(()),
        }
    }

    /// The sample count M: draws for Monte Carlo, nodes per dimension for
    /// Gauss-Hermite, 2 for unscented (2p points over p dimensions).
    pub fn samples(&self) -> usize {
        match *self {
            MomentScheme::MonteCarlo { samples } => samples,
            MomentScheme::GaussHermite { points } => points,
            MomentScheme::Unscented => 2,
        }
    }

    /// Number of evaluation points for a p-dimensional parameter.
    pub fn point_count(&self, dim: usize) -> Option<usize> {
        match *self {
            MomentScheme::MonteCarlo { samples } => Some(samples),
            MomentScheme::GaussHermite { points } => grid_size(points, dim),
            MomentScheme::Unscented => Some(2 * dim),
        }
    }

    /// Replaces a Gauss-Hermite grid that is too large for `dim` (beyond
    /// [`MAX_TENSOR_GRID_DIM`] or over `budget` points) with unscented points.
    pub fn resolve(self, dim: usize, budget: usize) -> MomentScheme {
        match self {
            MomentScheme::GaussHermite { .. }
                if dim > MAX_TENSOR_GRID_DIM
                    || self.point_count(dim).is_none_or(|n| n > budget) =>
            {
                MomentScheme::Unscented
            }
            other => other,
        }
    }
}
