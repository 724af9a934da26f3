//! Weighted Riemannian locality preserving projection.
//!
//! Training points on the SPD manifold are embedded through a heat
//! pseudo-kernel `K(i, j) = exp(-d(X_i, X_j) / sigma)`. A same-class kNN
//! graph, with edges scaled by the product of the two sample weights, gives
//! the Laplacian `L = D - G`. The projection `A` holds the generalized
//! eigenvectors of `K L K^T a = lambda (K D K^T + eps I) a` with the `r`
//! smallest eigenvalues, and a point `C` maps to `A^T K_C`.

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::spd::{SpdMatrix, Whitener};

/// Default neighbourhood size of the adjacency graph.
pub const DEFAULT_NEIGHBOURS: usize = 5;
/// Default upper bound on the projection dimension.
pub const DEFAULT_MAX_DIM: usize = 10;
/// Ridge on the degree-side matrix, relative to its mean diagonal.
pub const DEGREE_RIDGE: f64 = 1e-8;

/// Pairwise affine-invariant distances, computed in parallel over rows.
pub fn pairwise_distances(points: &[SpdMatrix]) -> Result<DMatrix<f64>> {
    let n = points.len();
    let whiteners = points
        .par_iter()
        .map(Whitener::new)
        .collect::<Result<Vec<_>>>()?;
    let rows = (0..n)
        .into_par_iter()
        .map(|i| {
            (i + 1..n)
                .map(|j| whiteners[i].distance(&points[j]))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = DMatrix::zeros(n, n);
    for (i, row) in rows.into_iter().enumerate() {
        for (off, d) in row.into_iter().enumerate() {
            let j = i + 1 + off;
            out[(i, j)] = d;
            out[(j, i)] = d;
        }
    }
    Ok(out)
}

/// Heat pseudo-kernel matrix with its bandwidth.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    pub values: DMatrix<f64>,
    pub sigma: f64,
}

impl KernelMatrix {
    /// Kernel from a precomputed distance matrix.
    pub fn from_distances(distances: &DMatrix<f64>, sigma: f64) -> Result<Self> {
        check_sigma(sigma)?;
        Ok(KernelMatrix {
            values: distances.map(|d| (-d / sigma).exp()),
            sigma,
        })
    }

    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.nrows() == 0
    }
}

fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidParameter(format!("bandwidth must be positive, got {sigma}")));
    }
    Ok(())
}

pub fn build_kernel(points: &[SpdMatrix], sigma: f64) -> Result<KernelMatrix> {
    check_sigma(sigma)?;
    KernelMatrix::from_distances(&pairwise_distances(points)?, sigma)
}

/// Median of the strictly upper-triangular entries; 1.0 when that median is 0.
pub fn median_of_distances(distances: &DMatrix<f64>) -> f64 {
    let n = distances.nrows();
    let mut d: Vec<f64> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .map(|(i, j)| distances[(i, j)])
        .collect();
    if d.is_empty() {
        return 1.0;
    }
    d.sort_by(f64::total_cmp);
    let m = d.len();
    let median = if m % 2 == 1 {
        d[m / 2]
    } else {
        0.5 * (d[m / 2 - 1] + d[m / 2])
    };
    if median > 0.0 {
        median
    } else {
        1.0
    }
}

/// Median pairwise geodesic distance, the default kernel bandwidth.
pub fn median_bandwidth(points: &[SpdMatrix]) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::InvalidParameter("bandwidth needs at least two points".into()));
    }
    Ok(median_of_distances(&pairwise_distances(points)?))
}

/// Adjacency, degree and Laplacian of a (weighted) neighbourhood graph.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    pub adjacency: DMatrix<f64>,
    pub degree: DVector<f64>,
    pub laplacian: DMatrix<f64>,
}

impl WeightedGraph {
    fn from_adjacency(adjacency: DMatrix<f64>) -> Self {
        let degree = DVector::from_iterator(
            adjacency.nrows(),
            adjacency.row_iter().map(|r| r.sum()),
        );
        let laplacian = DMatrix::from_diagonal(&degree) - &adjacency;
        WeightedGraph {
            adjacency,
            degree,
            laplacian,
        }
    }

    pub fn edge_count(&self) -> usize {
        let n = self.adjacency.nrows();
        (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .filter(|&(i, j)| self.adjacency[(i, j)] > 0.0)
            .count()
    }
}

/// `k` most similar same-label points of every node. Ties keep index order.
fn same_label_neighbours(kernel: &KernelMatrix, labels: &[usize], k: usize) -> Vec<Vec<usize>> {
    let n = kernel.len();
    (0..n)
        .map(|i| {
            let mut cand: Vec<usize> = (0..n).filter(|&j| j != i && labels[j] == labels[i]).collect();
            cand.sort_by(|&a, &b| kernel.values[(i, b)].total_cmp(&kernel.values[(i, a)]));
            cand.truncate(k);
            cand
        })
        .collect()
}

/// Symmetric binary kNN relation: an edge when either node is among the
/// other's neighbours.
fn knn_relation(kernel: &KernelMatrix, labels: &[usize], k: usize) -> Result<DMatrix<bool>> {
    let n = kernel.len();
    if labels.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: labels.len(),
        });
    }
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    let mut rel = DMatrix::from_element(n, n, false);
    for (i, nb) in same_label_neighbours(kernel, labels, k).into_iter().enumerate() {
        for j in nb {
            rel[(i, j)] = true;
            rel[(j, i)] = true;
        }
    }
    Ok(rel)
}

/// Binary same-class kNN graph.
pub fn build_graph(kernel: &KernelMatrix, labels: &[usize], k: usize) -> Result<WeightedGraph> {
    let rel = knn_relation(kernel, labels, k)?;
    Ok(WeightedGraph::from_adjacency(rel.map(|e| if e { 1.0 } else { 0.0 })))
}

/// Same-class kNN graph with edge `(i, j)` weighted by `w_i * w_j`.
pub fn build_weighted_graph(
    kernel: &KernelMatrix,
    labels: &[usize],
    weights: &[f64],
    k: usize,
) -> Result<WeightedGraph> {
    let n = kernel.len();
    if weights.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: weights.len(),
        });
    }
    if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
        return Err(Error::InvalidParameter("weights must be finite and non-negative".into()));
    }
    let rel = knn_relation(kernel, labels, k)?;
    let adjacency = DMatrix::from_fn(n, n, |i, j| if rel[(i, j)] { weights[i] * weights[j] } else { 0.0 });
    Ok(WeightedGraph::from_adjacency(adjacency))
}

/// Hyperparameters of a projection fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WrlppParams {
    pub neighbours: usize,
    /// Projection dimension; defaults to `min(N - 1, 10)`.
    pub dim: Option<usize>,
    /// Kernel bandwidth; defaults to the median pairwise distance.
    pub sigma: Option<f64>,
}

impl Default for WrlppParams {
    fn default() -> Self {
        WrlppParams {
            neighbours: DEFAULT_NEIGHBOURS,
            dim: None,
            sigma: None,
        }
    }
}

/// Fitted projection: training points, bandwidth and the `N x r` matrix `A`.
#[derive(Debug, Clone)]
pub struct WrlppModel {
    pub sigma: f64,
    pub points: Vec<SpdMatrix>,
    pub projection: DMatrix<f64>,
    /// Generalized eigenvalues of the retained directions, ascending.
    pub eigenvalues: Vec<f64>,
}

/// Fit of a projection plus the kernel it was built from.
#[derive(Debug, Clone)]
pub struct WrlppFit {
    pub model: WrlppModel,
    pub kernel: KernelMatrix,
    pub graph: WeightedGraph,
}

impl WrlppFit {
    /// Projection of training point `j`: `A^T` times column `j` of the kernel.
    pub fn project_training(&self, j: usize) -> Vec<f64> {
        let col = self.kernel.values.column(j);
        (self.model.projection.transpose() * col).iter().cloned().collect()
    }
}

impl WrlppModel {
    pub fn dim(&self) -> usize {
        self.projection.ncols()
    }

    /// Kernel vector `K_C(i) = exp(-d(X_i, C) / sigma)`.
    pub fn kernel_vector(&self, c: &SpdMatrix) -> Result<DVector<f64>> {
        let w = Whitener::new(c)?;
        let mut out = DVector::zeros(self.points.len());
        for (k, x) in out.iter_mut().zip(&self.points) {
            *k = (-w.distance(x)? / self.sigma).exp();
        }
        Ok(out)
    }

    /// `A^T K_C`.
    pub fn project(&self, c: &SpdMatrix) -> Result<Vec<f64>> {
        if let Some(p) = self.points.first() {
            if p.dim() != c.dim() {
                return Err(Error::DimensionMismatch {
                    expected: p.dim(),
                    found: c.dim(),
                });
            }
        }
        let k = self.kernel_vector(c)?;
        Ok((self.projection.transpose() * k).iter().cloned().collect())
    }
}

/// Fits a weighted projection from scratch.
pub fn fit_wrlpp(
    points: &[SpdMatrix],
    labels: &[usize],
    weights: &[f64],
    params: WrlppParams,
) -> Result<WrlppModel> {
    let distances = pairwise_distances(points)?;
    Ok(fit_wrlpp_with_distances(points.to_vec(), &distances, labels, weights, params)?.model)
}

/// Unweighted projection: every edge of the kNN graph has weight one.
pub fn fit_rlpp(points: &[SpdMatrix], labels: &[usize], params: WrlppParams) -> Result<WrlppModel> {
    let distances = pairwise_distances(points)?;
    Ok(fit_rlpp_with_distances(points.to_vec(), &distances, labels, params)?.model)
}

/// Unweighted fit reusing a precomputed distance matrix.
pub fn fit_rlpp_with_distances(
    points: Vec<SpdMatrix>,
    distances: &DMatrix<f64>,
    labels: &[usize],
    params: WrlppParams,
) -> Result<WrlppFit> {
    let n = points.len();
    check_fit_inputs(n, labels, n)?;
    check_distance_shape(distances, n)?;
    let sigma = params.sigma.unwrap_or_else(|| median_of_distances(distances));
    let kernel = KernelMatrix::from_distances(distances, sigma)?;
    let graph = build_graph(&kernel, labels, params.neighbours)?;
    let r = resolve_dim(params.dim, n)?;
    let (projection, eigenvalues) = solve_projection(&kernel, &graph, r)?;
    Ok(WrlppFit {
        model: WrlppModel {
            sigma,
            points,
            projection,
            eigenvalues,
        },
        kernel,
        graph,
    })
}

fn check_distance_shape(distances: &DMatrix<f64>, n: usize) -> Result<()> {
    if distances.nrows() != n || distances.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: distances.nrows(),
        });
    }
    Ok(())
}

fn check_fit_inputs(n: usize, labels: &[usize], n_weights: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidParameter("projection needs at least two points".into()));
    }
    if labels.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: labels.len(),
        });
    }
    if n_weights != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: n_weights,
        });
    }
    Ok(())
}

fn resolve_dim(dim: Option<usize>, n: usize) -> Result<usize> {
    let r = dim.unwrap_or_else(|| (n - 1).min(DEFAULT_MAX_DIM));
    if r == 0 || r > n {
        return Err(Error::InvalidParameter(format!(
            "projection dimension {r} must lie in [1, {n}]"
        )));
    }
    Ok(r)
}

/// Weighted fit reusing a precomputed distance matrix.
///
/// Weights are rescaled to unit mean before building the graph, so the
/// result does not depend on their overall scale and uniform weights
/// reproduce the unweighted fit exactly.
pub fn fit_wrlpp_with_distances(
    points: Vec<SpdMatrix>,
    distances: &DMatrix<f64>,
    labels: &[usize],
    weights: &[f64],
    params: WrlppParams,
) -> Result<WrlppFit> {
    let n = points.len();
    check_fit_inputs(n, labels, weights.len())?;
    check_distance_shape(distances, n)?;
    let mean = weights.iter().sum::<f64>() / n as f64;
    if !(mean > 0.0 && mean.is_finite()) {
        return Err(Error::InvalidParameter("sample weights must have a positive sum".into()));
    }
    let unit: Vec<f64> = weights.iter().map(|w| w / mean).collect();

    let sigma = params.sigma.unwrap_or_else(|| median_of_distances(distances));
    let kernel = KernelMatrix::from_distances(distances, sigma)?;
    let graph = build_weighted_graph(&kernel, labels, &unit, params.neighbours)?;
    let r = resolve_dim(params.dim, n)?;
    let (projection, eigenvalues) = solve_projection(&kernel, &graph, r)?;
    Ok(WrlppFit {
        model: WrlppModel {
            sigma,
            points,
            projection,
            eigenvalues,
        },
        kernel,
        graph,
    })
}

/// Solves `K L K^T a = lambda (K D K^T + eps I) a` for the `r` smallest
/// eigenvalues. Columns are normalized so `a^T B a = 1` and the entry of
/// largest magnitude is positive.
fn solve_projection(
    kernel: &KernelMatrix,
    graph: &WeightedGraph,
    r: usize,
) -> Result<(DMatrix<f64>, Vec<f64>)> {
    if graph.edge_count() == 0 {
        return Err(Error::GraphEmpty);
    }
    let n = kernel.len();
    let k = &kernel.values;
    let lhs = k * &graph.laplacian * k.transpose();
    let mut rhs = k * DMatrix::from_diagonal(&graph.degree) * k.transpose();
    let ridge = DEGREE_RIDGE * rhs.trace() / n as f64;
    for i in 0..n {
        rhs[(i, i)] += ridge;
    }
    let (values, mut vectors) = generalized_symmetric_eigen(&lhs, &rhs)?;
    canonicalize_clusters(&rhs, &values, &mut vectors);

    let mut projection = DMatrix::zeros(n, r);
    for c in 0..r {
        let mut col = vectors.column(c).clone_owned();
        let mut pivot = 0;
        for i in 1..n {
            if col[i].abs() > col[pivot].abs() {
                pivot = i;
            }
        }
        if col[pivot] < 0.0 {
            col.neg_mut();
        }
        projection.set_column(c, &col);
    }
    Ok((projection, values[..r].to_vec()))
}

/// Eigenvalues closer than this (relative to the largest magnitude) are
/// treated as one degenerate eigenspace.
const CLUSTER_TOLERANCE: f64 = 1e-6;

/// Replaces the basis of every cluster of (nearly) equal eigenvalues by a
/// canonical one that depends only on the spanned subspace.
///
/// The `B`-orthogonal projector onto the subspace is applied to the unit
/// vectors `e_i`, and the results are orthonormalized greedily, always
/// taking the longest remaining residual. A Laplacian with several
/// connected components has a multi-dimensional null space, so without
/// this step the returned directions would be an arbitrary rotation.
fn canonicalize_clusters(
    b: &DMatrix<f64>,
    values: &[f64],
    vectors: &mut DMatrix<f64>,
) {
    let n = values.len();
    let scale = values.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && values[end] - values[end - 1] <= CLUSTER_TOLERANCE * scale {
            end += 1;
        }
        let m = end - start;
        if m > 1 {
            let basis = vectors.columns(start, m).clone_owned();
            // Coordinates of P e_i in the B-orthonormal basis: row i of B V.
            let coords = b * &basis;
            let mut residuals: Vec<DVector<f64>> =
                (0..n).map(|i| coords.row(i).transpose()).collect();
            let mut q = DMatrix::zeros(m, m);
            for c in 0..m {
                let (pivot, _) = residuals
                    .iter()
                    .enumerate()
                    .fold((0, -1.0), |best, (i, r)| {
                        let nr = r.norm();
                        if nr > best.1 {
                            (i, nr)
                        } else {
                            best
                        }
                    });
                let dir = residuals[pivot].normalize();
                for r in residuals.iter_mut() {
                    let proj = dir.dot(r);
                    r.axpy(-proj, &dir, 1.0);
                }
                q.set_column(c, &dir);
            }
            let rotated = &basis * q;
            for c in 0..m {
                vectors.set_column(start + c, &rotated.column(c));
            }
        }
        start = end;
    }
}

/// Eigenpairs of `A v = lambda B v` for symmetric `A` and SPD `B`, ascending,
/// with `B`-orthonormal eigenvectors.
pub fn generalized_symmetric_eigen(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = a.nrows();
    let b_sym = (b + b.transpose()) * 0.5;
    let chol = Cholesky::new(b_sym)
        .ok_or_else(|| Error::EigenFailure("degree-side matrix is not positive definite".into()))?;
    let l = chol.l();
    let l_inv = l
        .solve_lower_triangular(&DMatrix::identity(n, n))
        .ok_or_else(|| Error::EigenFailure("singular Cholesky factor".into()))?;
    let c = &l_inv * a * l_inv.transpose();
    let c = (&c + c.transpose()) * 0.5;
    if c.iter().any(|v| !v.is_finite()) {
        return Err(Error::EigenFailure("non-finite reduced matrix".into()));
    }
    let eig = SymmetricEigen::new(c);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut y = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        y.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok((values, l_inv.transpose() * y))
}
