//! Binary LogitBoost primitives: working responses, weighted least squares
//! weak learners and the binomial log-likelihood.

use nalgebra::{Cholesky, DMatrix, DVector};

/// Working responses are clamped to `[-Z_MAX, Z_MAX]`.
pub const Z_MAX: f64 = 4.0;
/// Floor on the working weights `p (1 - p)`.
pub const MIN_WEIGHT: f64 = 1e-6;
/// Probabilities are kept inside `[P_EPS, 1 - P_EPS]`.
pub const P_EPS: f64 = 1e-12;
/// Ridge applied to singular normal equations, relative to their trace.
pub const REGRESSION_RIDGE: f64 = 1e-8;

/// `(z_j, w_j)` with `w = p (1 - p)` and `z = (y - p) / w`.
pub fn logitboost_responses(labels: &[bool], probs: &[f64]) -> (Vec<f64>, Vec<f64>) {
    assert_eq!(labels.len(), probs.len());
    labels
        .iter()
        .zip(probs)
        .map(|(&y, &p)| {
            let w = p * (1.0 - p);
            let target = if y { 1.0 } else { 0.0 };
            let z = ((target - p) / w).clamp(-Z_MAX, Z_MAX);
            (z, w.max(MIN_WEIGHT))
        })
        .unzip()
}

/// `p = e^F / (e^F + e^-F)`, clamped away from 0 and 1.
pub fn probability(f: f64) -> f64 {
    (1.0 / (1.0 + (-2.0 * f).exp())).clamp(P_EPS, 1.0 - P_EPS)
}

/// Negative binomial log-likelihood of the labels under `probs`.
pub fn negative_log_likelihood(labels: &[bool], probs: &[f64]) -> f64 {
    labels
        .iter()
        .zip(probs)
        .map(|(&y, &p)| if y { -p.ln() } else { -(1.0 - p).ln() })
        .sum()
}

/// Weighted least squares fit `z ~ b0 + b^T x`; returns `[b0, b...]`.
///
/// The design is centred on its weighted mean, so a constant design yields
/// `b = 0` and `b0` equal to the weighted mean of `z`. A ridge of
/// `1e-8 * trace / p` is added only when the normal equations are singular.
pub fn fit_weak_learner(x: &[Vec<f64>], z: &[f64], w: &[f64]) -> Vec<f64> {
    let n = x.len();
    assert!(n >= 1 && z.len() == n && w.len() == n);
    let p = x[0].len();
    let total: f64 = w.iter().sum();
    let mean_x: Vec<f64> = (0..p)
        .map(|k| x.iter().zip(w).map(|(xi, wi)| wi * xi[k]).sum::<f64>() / total)
        .collect();
    let mean_z = z.iter().zip(w).map(|(zi, wi)| wi * zi).sum::<f64>() / total;
    if p == 0 {
        return vec![mean_z];
    }

    let mut gram = DMatrix::zeros(p, p);
    let mut rhs = DVector::zeros(p);
    let mut centred = vec![0.0; p];
    for ((xi, &zi), &wi) in x.iter().zip(z).zip(w) {
        for k in 0..p {
            centred[k] = xi[k] - mean_x[k];
        }
        for a in 0..p {
            let ca = wi * centred[a];
            rhs[a] += ca * (zi - mean_z);
            for b in a..p {
                gram[(a, b)] += ca * centred[b];
            }
        }
    }
    for a in 0..p {
        for b in 0..a {
            gram[(a, b)] = gram[(b, a)];
        }
    }

    let beta = solve_normal_equations(gram, &rhs);
    let intercept = mean_z - beta.iter().zip(&mean_x).map(|(b, m)| b * m).sum::<f64>();
    std::iter::once(intercept).chain(beta.iter().cloned()).collect()
}

fn solve_normal_equations(gram: DMatrix<f64>, rhs: &DVector<f64>) -> DVector<f64> {
    let p = gram.nrows();
    let max_diag = gram.diagonal().max();
    if max_diag > 0.0 {
        if let Some(chol) = Cholesky::new(gram.clone()) {
            let l = chol.l_dirty();
            let min_pivot = (0..p).map(|i| l[(i, i)] * l[(i, i)]).fold(f64::INFINITY, f64::min);
            if min_pivot > 1e-12 * max_diag {
                return chol.solve(rhs);
            }
        }
    }
    let ridge = match REGRESSION_RIDGE * gram.trace() / p as f64 {
        r if r > 0.0 => r,
        _ => REGRESSION_RIDGE,
    };
    let mut reg = gram;
    for i in 0..p {
        reg[(i, i)] += ridge;
    }
    match Cholesky::new(reg) {
        Some(chol) => chol.solve(rhs),
        None => DVector::zeros(p),
    }
}

/// `b0 + b^T x`.
pub fn evaluate_linear(coeffs: &[f64], x: &[f64]) -> f64 {
    coeffs[0] + coeffs[1..].iter().zip(x).map(|(b, v)| b * v).sum::<f64>()
}
