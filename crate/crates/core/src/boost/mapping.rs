//! Maps from SPD descriptors to Euclidean vectors used by the weak learners.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::spd::{karcher_mean, matrix_log, sqrt_and_inv_sqrt, vectorize_upper_triangle, SpdMatrix};
use crate::wrlpp::{fit_rlpp_with_distances, fit_wrlpp_with_distances, WrlppModel, WrlppParams};

/// Strategy for embedding descriptors before regression.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Mapper {
    /// Weighted Riemannian locality preserving projection.
    #[default]
    Wrlpp,
    /// The same projection with an unweighted graph.
    Rlpp,
    /// Upper triangle of the raw matrix.
    UpperTriangle,
    /// Tangent space at the identity: `vec(log X)`.
    IdentityTangent,
    /// Tangent space at the weighted Karcher mean of the training points.
    KarcherTangent,
}

impl Mapper {
    pub fn needs_distances(self) -> bool {
        matches!(self, Mapper::Wrlpp | Mapper::Rlpp)
    }
}

/// A fitted mapping.
#[derive(Debug, Clone)]
pub enum Projection {
    Riemannian(WrlppModel),
    UpperTriangle,
    IdentityTangent,
    /// Whitening by `mu^{-1/2}` before the logarithm.
    KarcherTangent { mean: SpdMatrix, inv_sqrt: DMatrix<f64> },
}

impl Projection {
    pub fn karcher(mean: SpdMatrix) -> Result<Self> {
        let (_, inv_sqrt) = sqrt_and_inv_sqrt(&mean)?;
        Ok(Projection::KarcherTangent { mean, inv_sqrt })
    }

    pub fn apply(&self, c: &SpdMatrix) -> Result<Vec<f64>> {
        match self {
            Projection::Riemannian(m) => m.project(c),
            Projection::UpperTriangle => Ok(vectorize_upper_triangle(c.matrix())),
            Projection::IdentityTangent => Ok(vectorize_upper_triangle(matrix_log(c)?.matrix())),
            Projection::KarcherTangent { inv_sqrt, .. } => {
                let inner = SpdMatrix::from_symmetric_unchecked(c.congruence(inv_sqrt).into_matrix());
                Ok(vectorize_upper_triangle(matrix_log(&inner)?.matrix()))
            }
        }
    }

    pub fn mapper(&self) -> Mapper {
        match self {
            Projection::Riemannian(_) => Mapper::Wrlpp,
            Projection::UpperTriangle => Mapper::UpperTriangle,
            Projection::IdentityTangent => Mapper::IdentityTangent,
            Projection::KarcherTangent { .. } => Mapper::KarcherTangent,
        }
    }
}

/// Fits `mapper` on the training descriptors and returns the projection
/// together with the mapped training points.
pub fn fit_projection(
    mapper: Mapper,
    points: Vec<SpdMatrix>,
    distances: Option<&DMatrix<f64>>,
    labels: &[usize],
    weights: &[f64],
    params: WrlppParams,
) -> Result<(Projection, Vec<Vec<f64>>)> {
    match mapper {
        Mapper::Wrlpp | Mapper::Rlpp => {
            let owned;
            let distances = match distances {
                Some(d) => d,
                None => {
                    owned = crate::wrlpp::pairwise_distances(&points)?;
                    &owned
                }
            };
            let fit = if mapper == Mapper::Wrlpp {
                fit_wrlpp_with_distances(points, distances, labels, weights, params)?
            } else {
                fit_rlpp_with_distances(points, distances, labels, params)?
            };
            let mapped = (0..fit.kernel.len()).map(|j| fit.project_training(j)).collect();
            Ok((Projection::Riemannian(fit.model), mapped))
        }
        Mapper::UpperTriangle | Mapper::IdentityTangent => {
            let proj = if mapper == Mapper::UpperTriangle {
                Projection::UpperTriangle
            } else {
                Projection::IdentityTangent
            };
            let mapped = points.iter().map(|p| proj.apply(p)).collect::<Result<_>>()?;
            Ok((proj, mapped))
        }
        Mapper::KarcherTangent => {
            let mean = karcher_mean(&points, weights)?.mean;
            let proj = Projection::karcher(mean)?;
            let mapped = points.iter().map(|p| proj.apply(p)).collect::<Result<_>>()?;
            Ok((proj, mapped))
        }
    }
}
