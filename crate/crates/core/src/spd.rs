//! Geometry of the manifold of symmetric positive definite matrices under
//! the affine-invariant metric.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Eigenvalues at or below this fraction of the largest one are rejected.
pub const EIGEN_TOLERANCE: f64 = 1e-12;

/// Karcher mean iteration cap.
pub const KARCHER_MAX_ITERS: usize = 50;
/// Karcher mean stopping tolerance on the whitened update norm.
pub const KARCHER_TOLERANCE: f64 = 1e-8;

/// A symmetric positive definite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdMatrix(DMatrix<f64>);

/// A point of the tangent space: a symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector(DMatrix<f64>);

impl SpdMatrix {
    /// Validates symmetry and positive definiteness.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        check_symmetric(&m)?;
        let m = symmetrize(m);
        let eig = m.clone().symmetric_eigenvalues();
        check_spectrum(eig.as_slice())?;
        Ok(SpdMatrix(m))
    }

    /// Wraps a matrix that is symmetric and positive definite by construction.
    pub fn from_symmetric_unchecked(m: DMatrix<f64>) -> Self {
        debug_assert!(m.is_square());
        SpdMatrix(m)
    }

    pub fn identity(d: usize) -> Self {
        SpdMatrix(DMatrix::identity(d, d))
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        SpdMatrix::new(DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(diag)))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    /// `A X A^T`.
    pub fn congruence(&self, a: &DMatrix<f64>) -> SpdMatrix {
        SpdMatrix(symmetrize(a * &self.0 * a.transpose()))
    }
}

impl TangentVector {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        check_symmetric(&m)?;
        Ok(TangentVector(symmetrize(m)))
    }

    pub fn zeros(d: usize) -> Self {
        TangentVector(DMatrix::zeros(d, d))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }
}

fn check_symmetric(m: &DMatrix<f64>) -> Result<()> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            found: m.ncols(),
        });
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("matrix has non-finite entries".into()));
    }
    let scale = m.amax();
    let asym = (m - m.transpose()).amax();
    if asym > 1e-12 * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::InvalidParameter(format!(
            "matrix is not symmetric (asymmetry {asym:e})"
        )));
    }
    Ok(())
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

fn check_spectrum(eig: &[f64]) -> Result<()> {
    let largest = eig.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let smallest = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(largest > 0.0) || smallest <= EIGEN_TOLERANCE * largest {
        return Err(Error::NotPositiveDefinite {
            eigenvalue: smallest,
            largest,
        });
    }
    Ok(())
}

/// `U f(D) U^T` for a symmetric matrix.
fn spectral_map(m: &DMatrix<f64>, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(m.clone());
    spectral_from(&eig, f)
}

fn spectral_from(eig: &SymmetricEigen<f64, nalgebra::Dyn>, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let u = &eig.eigenvectors;
    let mut scaled = u.clone();
    for (j, lambda) in eig.eigenvalues.iter().enumerate() {
        let fl = f(*lambda);
        scaled.column_mut(j).scale_mut(fl);
    }
    symmetrize(scaled * u.transpose())
}

/// Validated eigendecomposition of an SPD matrix.
fn spd_eigen(s: &SpdMatrix) -> Result<SymmetricEigen<f64, nalgebra::Dyn>> {
    let eig = SymmetricEigen::new(s.0.clone());
    check_spectrum(eig.eigenvalues.as_slice())?;
    Ok(eig)
}

/// Principal matrix logarithm.
pub fn matrix_log(s: &SpdMatrix) -> Result<TangentVector> {
    Ok(TangentVector(spectral_from(&spd_eigen(s)?, f64::ln)))
}

/// Matrix exponential of a symmetric matrix.
pub fn matrix_exp(s: &DMatrix<f64>) -> Result<SpdMatrix> {
    check_symmetric(s)?;
    Ok(SpdMatrix(spectral_map(&symmetrize(s.clone()), f64::exp)))
}

/// `(X^{1/2}, X^{-1/2})`.
pub fn sqrt_and_inv_sqrt(x: &SpdMatrix) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let eig = spd_eigen(x)?;
    Ok((spectral_from(&eig, f64::sqrt), spectral_from(&eig, |l| l.sqrt().recip())))
}

/// Logarithm map of `y` into the tangent space at `x`.
pub fn log_map(x: &SpdMatrix, y: &SpdMatrix) -> Result<TangentVector> {
    check_same_dim(x, y)?;
    let (half, inv_half) = sqrt_and_inv_sqrt(x)?;
    let inner = SpdMatrix(symmetrize(&inv_half * &y.0 * &inv_half));
    let log = matrix_log(&inner)?;
    Ok(TangentVector(symmetrize(&half * log.0 * &half)))
}

/// Exponential map of tangent vector `v` at `x`.
pub fn exp_map(x: &SpdMatrix, v: &TangentVector) -> Result<SpdMatrix> {
    if v.0.nrows() != x.dim() {
        return Err(Error::DimensionMismatch {
            expected: x.dim(),
            found: v.0.nrows(),
        });
    }
    let (half, inv_half) = sqrt_and_inv_sqrt(x)?;
    let inner = spectral_map(&symmetrize(&inv_half * &v.0 * &inv_half), f64::exp);
    Ok(SpdMatrix(symmetrize(&half * inner * &half)))
}

fn check_same_dim(x: &SpdMatrix, y: &SpdMatrix) -> Result<()> {
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch {
            expected: x.dim(),
            found: y.dim(),
        });
    }
    Ok(())
}

/// Inverse Cholesky factor of an SPD matrix, cached for repeated distances.
#[derive(Debug, Clone)]
pub struct Whitener {
    inv_chol: DMatrix<f64>,
}

impl Whitener {
    pub fn new(x: &SpdMatrix) -> Result<Self> {
        let chol = nalgebra::Cholesky::new(x.0.clone()).ok_or(Error::NotPositiveDefinite {
            eigenvalue: f64::NAN,
            largest: f64::NAN,
        })?;
        let l = chol.l();
        let inv_chol = l
            .solve_lower_triangular(&DMatrix::identity(x.dim(), x.dim()))
            .ok_or_else(|| Error::EigenFailure("singular Cholesky factor".into()))?;
        Ok(Whitener { inv_chol })
    }

    /// Eigenvalues of `L^{-1} Y L^{-T}`, the generalized eigenvalues of `(Y, X)`.
    pub fn relative_eigenvalues(&self, y: &SpdMatrix) -> Result<Vec<f64>> {
        if y.dim() != self.inv_chol.nrows() {
            return Err(Error::DimensionMismatch {
                expected: self.inv_chol.nrows(),
                found: y.dim(),
            });
        }
        let m = symmetrize(&self.inv_chol * &y.0 * self.inv_chol.transpose());
        let eig = m.symmetric_eigenvalues();
        let eig = eig.as_slice().to_vec();
        if eig.iter().any(|&l| !(l > 0.0)) {
            let largest = eig.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let smallest = eig.iter().cloned().fold(f64::INFINITY, f64::min);
            return Err(Error::NotPositiveDefinite {
                eigenvalue: smallest,
                largest,
            });
        }
        Ok(eig)
    }

    /// Geodesic distance from the whitened base point to `y`.
    pub fn distance(&self, y: &SpdMatrix) -> Result<f64> {
        let eig = self.relative_eigenvalues(y)?;
        Ok(eig.iter().map(|l| l.ln().powi(2)).sum::<f64>().sqrt())
    }
}

/// Affine-invariant geodesic distance `sqrt(sum_i ln^2 lambda_i)`.
pub fn geodesic_distance(x: &SpdMatrix, y: &SpdMatrix) -> Result<f64> {
    check_same_dim(x, y)?;
    Whitener::new(x)?.distance(y)
}

/// Outcome of [`karcher_mean`].
#[derive(Debug, Clone)]
pub struct KarcherMean {
    pub mean: SpdMatrix,
    pub iterations: usize,
    /// False when the iteration cap was hit before the tolerance.
    pub converged: bool,
}

/// Weighted Karcher (Fréchet) mean by fixed-point iteration in the tangent
/// space of the current estimate, starting from the weighted arithmetic mean.
pub fn karcher_mean(points: &[SpdMatrix], weights: &[f64]) -> Result<KarcherMean> {
    if points.is_empty() {
        return Err(Error::InvalidParameter("karcher mean of an empty set".into()));
    }
    if weights.len() != points.len() {
        return Err(Error::DimensionMismatch {
            expected: points.len(),
            found: weights.len(),
        });
    }
    if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
        return Err(Error::InvalidParameter("weights must be finite and non-negative".into()));
    }
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::InvalidParameter("weights must not all be zero".into()));
    }
    let d = points[0].dim();
    for p in points {
        check_same_dim(&points[0], p)?;
    }
    let weights: Vec<f64> = weights.iter().map(|w| w / total).collect();

    let mut start = DMatrix::zeros(d, d);
    for (p, w) in points.iter().zip(&weights) {
        start += &p.0 * *w;
    }
    let mut mean = SpdMatrix::new(symmetrize(start))?;

    for iter in 1..=KARCHER_MAX_ITERS {
        let (half, inv_half) = sqrt_and_inv_sqrt(&mean)?;
        let mut step = DMatrix::zeros(d, d);
        for (p, w) in points.iter().zip(&weights) {
            if *w == 0.0 {
                continue;
            }
            let inner = SpdMatrix(symmetrize(&inv_half * &p.0 * &inv_half));
            step += matrix_log(&inner)?.0 * *w;
        }
        let norm = step.norm();
        mean = SpdMatrix(symmetrize(&half * spectral_map(&step, f64::exp) * &half));
        if norm <= KARCHER_TOLERANCE {
            return Ok(KarcherMean {
                mean,
                iterations: iter,
                converged: true,
            });
        }
    }
    Ok(KarcherMean {
        mean,
        iterations: KARCHER_MAX_ITERS,
        converged: false,
    })
}

/// Row-major upper triangle with off-diagonal entries scaled by `sqrt(2)`,
/// so the Euclidean norm of the result equals the Frobenius norm of `s`.
pub fn vectorize_upper_triangle(s: &DMatrix<f64>) -> Vec<f64> {
    let d = s.nrows();
    let mut out = Vec::with_capacity(d * (d + 1) / 2);
    for i in 0..d {
        for j in i..d {
            let v = s[(i, j)];
            out.push(if i == j { v } else { v * std::f64::consts::SQRT_2 });
        }
    }
    out
}

/// Inverse of [`vectorize_upper_triangle`].
pub fn unvectorize_upper_triangle(v: &[f64]) -> Result<DMatrix<f64>> {
    // d(d+1)/2 = n  =>  d = (sqrt(8n+1) - 1) / 2
    let d = (((8 * v.len() + 1) as f64).sqrt() as usize - 1) / 2;
    if d * (d + 1) / 2 != v.len() {
        return Err(Error::InvalidParameter(format!(
            "{} is not a triangular number",
            v.len()
        )));
    }
    let mut m = DMatrix::zeros(d, d);
    let mut k = 0;
    for i in 0..d {
        for j in i..d {
            let x = if i == j { v[k] } else { v[k] / std::f64::consts::SQRT_2 };
            m[(i, j)] = x;
            m[(j, i)] = x;
            k += 1;
        }
    }
    Ok(m)
}

/// Random SPD matrix `A A^T / d + floor * I` with standard normal `A`.
pub fn sample_spd<R: Rng + ?Sized>(rng: &mut R, d: usize, floor: f64) -> SpdMatrix {
    let a = DMatrix::from_fn(d, d, |_, _| standard_normal(rng));
    let mut m = &a * a.transpose() / d as f64;
    for i in 0..d {
        m[(i, i)] += floor;
    }
    SpdMatrix(symmetrize(m))
}

/// Random symmetric matrix with standard normal entries scaled by `scale`.
pub fn sample_symmetric<R: Rng + ?Sized>(rng: &mut R, d: usize, scale: f64) -> DMatrix<f64> {
    let a = DMatrix::from_fn(d, d, |_, _| standard_normal(rng) * scale);
    symmetrize(a)
}

fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rel_err(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
        (a - b).amax() / b.amax().max(1.0)
    }

    #[test]
    fn log_of_identity_and_diagonal() {
        assert_eq!(matrix_log(&SpdMatrix::identity(4)).unwrap().norm(), 0.0);
        let d = SpdMatrix::from_diagonal(&[2.0, 0.5]).unwrap();
        let l = matrix_log(&d).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[2f64.ln(), 0.0, 0.0, 0.5f64.ln()]);
        assert!((l.matrix() - expected).amax() < 1e-15);
    }

    #[test]
    fn exp_of_zero_and_diagonal() {
        let e = matrix_exp(&DMatrix::zeros(3, 3)).unwrap();
        assert!((e.matrix() - DMatrix::identity(3, 3)).amax() < 1e-15);
        let e = matrix_exp(&DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0])).unwrap();
        let expected = DMatrix::from_row_slice(
            2,
            2,
            &[std::f64::consts::E, 0.0, 0.0, 1.0 / std::f64::consts::E],
        );
        assert!((e.matrix() - expected).amax() < 1e-15);
    }

    #[test]
    fn exp_log_round_trips() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for d in [2, 5, 15] {
            let x = sample_spd(&mut rng, d, 0.1);
            let back = matrix_exp(matrix_log(&x).unwrap().matrix()).unwrap();
            assert!(rel_err(back.matrix(), x.matrix()) < 1e-10);
            let s = sample_symmetric(&mut rng, d, 0.5);
            let back = matrix_log(&matrix_exp(&s).unwrap()).unwrap();
            assert!(rel_err(back.matrix(), &s) < 1e-10);
        }
    }

    #[test]
    fn log_rejects_singular_and_indefinite() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let s = SpdMatrix::from_symmetric_unchecked(m.clone());
        assert!(matches!(matrix_log(&s), Err(Error::NotPositiveDefinite { .. })));
        assert!(SpdMatrix::new(m).is_err());
        let neg = SpdMatrix::from_symmetric_unchecked(DMatrix::from_diagonal_element(2, 2, -1.0));
        assert!(matches!(geodesic_distance(&neg, &neg), Err(Error::NotPositiveDefinite { .. })));
    }

    #[test]
    fn rejects_asymmetric_input() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 0.0, 2.0]);
        assert!(SpdMatrix::new(m.clone()).is_err());
        assert!(matrix_exp(&m).is_err());
    }

    #[test]
    fn log_map_basics() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x = sample_spd(&mut rng, 4, 0.2);
        let y = sample_spd(&mut rng, 4, 0.2);
        assert!(log_map(&x, &x).unwrap().norm() < 1e-12);
        let at_identity = log_map(&SpdMatrix::identity(4), &y).unwrap();
        assert!((at_identity.matrix() - matrix_log(&y).unwrap().matrix()).amax() < 1e-12);

        // Whitened tangent norm equals the geodesic distance.
        let v = log_map(&x, &y).unwrap();
        let (_, inv_half) = sqrt_and_inv_sqrt(&x).unwrap();
        let whitened = (&inv_half * v.matrix() * &inv_half).norm();
        assert!((whitened - geodesic_distance(&x, &y).unwrap()).abs() < 1e-10);

        let back = exp_map(&x, &v).unwrap();
        assert!(rel_err(back.matrix(), y.matrix()) < 1e-10);
    }

    #[test]
    fn distance_special_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = sample_spd(&mut rng, 5, 0.1);
        assert!(geodesic_distance(&x, &x).unwrap() < 1e-12);
        for d in [2usize, 5, 15] {
            let e = SpdMatrix::from_symmetric_unchecked(
                DMatrix::identity(d, d) * std::f64::consts::E,
            );
            let dist = geodesic_distance(&SpdMatrix::identity(d), &e).unwrap();
            assert!((dist - (d as f64).sqrt()).abs() <= 1e-12);
        }
    }

    #[test]
    fn distance_matches_definition_chain() {
        // trace(log^2(X^{-1/2} Y X^{-1/2})) through full eigendecompositions.
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..20 {
            let x = sample_spd(&mut rng, 6, 0.1);
            let y = sample_spd(&mut rng, 6, 0.1);
            let (_, inv_half) = sqrt_and_inv_sqrt(&x).unwrap();
            let inner = SpdMatrix::new(symmetrize(&inv_half * y.matrix() * &inv_half)).unwrap();
            let l = matrix_log(&inner).unwrap().into_matrix();
            let oracle = (&l * &l).trace().sqrt();
            assert!((geodesic_distance(&x, &y).unwrap() - oracle).abs() < 1e-10);
        }
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let a = SpdMatrix::identity(2);
        let b = SpdMatrix::identity(3);
        assert!(matches!(geodesic_distance(&a, &b), Err(Error::DimensionMismatch { .. })));
        assert!(log_map(&a, &b).is_err());
    }

    #[test]
    fn karcher_trivial_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let x = sample_spd(&mut rng, 3, 0.3);
        let single = karcher_mean(std::slice::from_ref(&x), &[2.0]).unwrap();
        assert!(rel_err(single.mean.matrix(), x.matrix()) < 1e-12);
        let pair = karcher_mean(&[x.clone(), x.clone()], &[0.3, 5.0]).unwrap();
        assert!(rel_err(pair.mean.matrix(), x.matrix()) < 1e-12);
        assert!(pair.converged);
    }

    #[test]
    fn karcher_geometric_midpoint() {
        let e2 = std::f64::consts::E.powi(2);
        let a = SpdMatrix::identity(2);
        let b = SpdMatrix::from_diagonal(&[e2, e2]).unwrap();
        let m = karcher_mean(&[a, b], &[1.0, 1.0]).unwrap();
        let expected = DMatrix::identity(2, 2) * std::f64::consts::E;
        assert!((m.mean.matrix() - expected).amax() < 1e-9);
    }

    #[test]
    fn karcher_input_validation() {
        assert!(karcher_mean(&[], &[]).is_err());
        let x = SpdMatrix::identity(2);
        assert!(karcher_mean(std::slice::from_ref(&x), &[0.0]).is_err());
        assert!(karcher_mean(std::slice::from_ref(&x), &[-1.0]).is_err());
        assert!(karcher_mean(&[x], &[1.0, 1.0]).is_err());
    }

    #[test]
    fn upper_triangle_vectorization() {
        assert_eq!(vectorize_upper_triangle(&DMatrix::identity(2, 2)), vec![1.0, 0.0, 1.0]);
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 3.0]);
        let v = vectorize_upper_triangle(&m);
        assert_eq!(v, vec![1.0, 2.0 * std::f64::consts::SQRT_2, 3.0]);
        assert_eq!(unvectorize_upper_triangle(&v).unwrap(), m);
        assert!(unvectorize_upper_triangle(&[1.0, 2.0]).is_err());
    }

    fn random_invertible(rng: &mut ChaCha8Rng, d: usize) -> DMatrix<f64> {
        loop {
            let a = DMatrix::from_fn(d, d, |_, _| standard_normal(rng));
            if a.clone().lu().determinant().abs() > 1e-2 {
                return a;
            }
        }
    }

    #[test]
    fn distance_is_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(40);
        for _ in 0..200 {
            let x = sample_spd(&mut rng, 5, 0.05);
            let y = sample_spd(&mut rng, 5, 0.05);
            let (a, b) = (geodesic_distance(&x, &y).unwrap(), geodesic_distance(&y, &x).unwrap());
            assert!((a - b).abs() <= 1e-10);
        }
    }

    #[test]
    fn distance_is_affine_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..500 {
            let x = sample_spd(&mut rng, 4, 0.1);
            let y = sample_spd(&mut rng, 4, 0.1);
            let a = random_invertible(&mut rng, 4);
            let d0 = geodesic_distance(&x, &y).unwrap();
            let d1 = geodesic_distance(&x.congruence(&a), &y.congruence(&a)).unwrap();
            assert!((d0 - d1).abs() <= 1e-8, "{d0} vs {d1}");
        }
    }

    #[test]
    fn triangle_inequality() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..1000 {
            let x = sample_spd(&mut rng, 3, 0.05);
            let y = sample_spd(&mut rng, 3, 0.05);
            let z = sample_spd(&mut rng, 3, 0.05);
            let xz = geodesic_distance(&x, &z).unwrap();
            let xy = geodesic_distance(&x, &y).unwrap();
            let yz = geodesic_distance(&y, &z).unwrap();
            assert!(xz <= xy + yz + 1e-9);
        }
    }

    #[test]
    fn karcher_mean_is_a_local_minimum() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        for _ in 0..10 {
            let points: Vec<SpdMatrix> = (0..6).map(|_| sample_spd(&mut rng, 4, 0.1)).collect();
            let weights: Vec<f64> = (0..6).map(|i| 0.5 + i as f64).collect();
            let m = karcher_mean(&points, &weights).unwrap();
            assert!(m.converged);
            let objective = |mu: &SpdMatrix| -> f64 {
                points
                    .iter()
                    .zip(&weights)
                    .map(|(p, w)| w * geodesic_distance(mu, p).unwrap().powi(2))
                    .sum()
            };
            let base = objective(&m.mean);
            for _ in 0..20 {
                let step = TangentVector::new(sample_symmetric(&mut rng, 4, 1e-3)).unwrap();
                let moved = exp_map(&m.mean, &step).unwrap();
                assert!(objective(&moved) >= base - 1e-9);
            }
        }
    }

    #[test]
    fn vectorization_is_an_isometry() {
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        for d in 1..8 {
            let s = sample_symmetric(&mut rng, d, 2.0);
            let v = vectorize_upper_triangle(&s);
            assert_eq!(v.len(), d * (d + 1) / 2);
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!((norm - s.norm()).abs() <= 1e-12 * s.norm().max(1.0));
            assert!((unvectorize_upper_triangle(&v).unwrap() - &s).amax() < 1e-14);
        }
    }
}
