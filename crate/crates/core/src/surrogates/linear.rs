//! Linear-family regressors.
//!
//! Objectives are the literal unscaled forms, with an unpenalized intercept:
//!
//! ```text
//! linear       sum (y - b - Xw)^2
//! ridge        sum (y - b - Xw)^2 + λ |w|_2^2
//! lasso        sum (y - b - Xw)^2 + λ |w|_1
//! elastic net  sum (y - b - Xw)^2 + λ1 |w|_1 + λ2 |w|_2^2
//! huber        sum H_ε(y - b - Xw) + λ |w|_2^2
//! ```
//!
//! Libraries that scale the squared error by `1/(2N)` use
//! `λ_conventional = λ / (2N)` for the same minimizer.

use nalgebra::{DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::linalg::{centered, column_means, design, solve_normal, Singular};
use crate::error::{Error, Result};

/// `b + w . x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub intercept: f64,
    pub weights: Vec<f64>,
}

impl LinearModel {
    pub fn predict(&self, x: &[f64]) -> f64 {
        self.intercept + self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
    }
}

fn labels(y: &[f64]) -> DVector<f64> {
    DVector::from_row_slice(y)
}

fn assemble(w: DVector<f64>, x_means: &DVector<f64>, y_mean: f64) -> LinearModel {
    let intercept = y_mean - w.dot(x_means);
    LinearModel {
        intercept,
        weights: w.iter().copied().collect(),
    }
}

/// Least squares with an optional L2 penalty on the non-intercept weights.
pub fn fit_ridge(x: &[Vec<f64>], y: &[f64], lambda: f64, fit_intercept: bool, singular: Singular) -> Result<LinearModel> {
    let xm = design(x);
    let yv = labels(y);
    let p = xm.ncols();
    let (xc, x_means, yc, y_mean) = if fit_intercept {
        let x_means = column_means(&xm);
        let y_mean = yv.mean();
        (centered(&xm, &x_means), x_means, yv.add_scalar(-y_mean), y_mean)
    } else {
        (xm, DVector::zeros(p), yv, 0.0)
    };
    let mut gram = xc.transpose() * &xc;
    for i in 0..p {
        gram[(i, i)] += lambda;
    }
    let rhs = xc.transpose() * yc;
    let w = solve_normal(&gram, &rhs, singular)?;
    Ok(assemble(w, &x_means, y_mean))
}

/// Degree-2 expansion: `(1, x_1..x_m, x_i x_j for i <= j)`.
pub fn expand_polynomial(x: &[f64], degree: usize) -> Result<Vec<f64>> {
    if degree != 2 {
        return Err(Error::InvalidArgument(format!(
            "polynomial degree {degree} unsupported; only 2 is implemented"
        )));
    }
    let m = x.len();
    let mut out = Vec::with_capacity(1 + m + m * (m + 1) / 2);
    out.push(1.0);
    out.extend_from_slice(x);
    for i in 0..m {
        for j in i..m {
            out.push(x[i] * x[j]);
        }
    }
    Ok(out)
}

/// Unregularized least squares on the expanded features; the constant column
/// plays the intercept. Rank-deficient designs get the minimum-norm solution.
pub fn fit_polynomial(x: &[Vec<f64>], y: &[f64]) -> Result<LinearModel> {
    let expanded: Vec<Vec<f64>> = x
        .iter()
        .map(|r| expand_polynomial(r, 2))
        .collect::<Result<_>>()?;
    fit_ridge(&expanded, y, 0.0, false, Singular::PseudoInverse)
}

/// Objective of the elastic-net family at `(b, w)`.
pub fn elastic_net_objective(x: &[Vec<f64>], y: &[f64], model: &LinearModel, l1: f64, l2: f64) -> f64 {
    let sse: f64 = x
        .iter()
        .zip(y)
        .map(|(r, &t)| (t - model.predict(r)).powi(2))
        .sum();
    let w1: f64 = model.weights.iter().map(|w| w.abs()).sum();
    let w2: f64 = model.weights.iter().map(|w| w * w).sum();
    sse + l1 * w1 + l2 * w2
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DescentOptions {
    pub max_sweeps: usize,
    pub tol: f64,
}

impl Default for DescentOptions {
    fn default() -> Self {
        Self {
            max_sweeps: 1000,
            tol: 1e-7,
        }
    }
}

fn soft_threshold(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

/// Cyclic coordinate descent for the elastic-net objective (lasso when
/// `l2 = 0`). Returns the model and the objective after every sweep.
///
/// Coordinate update on centered data:
/// `w_j = S(x_j . (r + x_j w_j), l1 / 2) / (|x_j|^2 + l2)`.
pub fn coordinate_descent(
    x: &[Vec<f64>],
    y: &[f64],
    l1: f64,
    l2: f64,
    opts: DescentOptions,
) -> Result<(LinearModel, Vec<f64>)> {
    let xm = design(x);
    let x_means = column_means(&xm);
    let xc = centered(&xm, &x_means);
    let y_mean = labels(y).mean();
    let p = xc.ncols();
    let cols: Vec<Vec<f64>> = xc.column_iter().map(|c| c.iter().copied().collect()).collect();
    let norms: Vec<f64> = cols.iter().map(|c| c.iter().map(|v| v * v).sum()).collect();
    let mut resid: Vec<f64> = y.iter().map(|v| v - y_mean).collect();
    let mut w = vec![0.0; p];
    let mut trace = Vec::new();
    let objective = |w: &[f64], resid: &[f64]| {
        resid.iter().map(|r| r * r).sum::<f64>()
            + l1 * w.iter().map(|v| v.abs()).sum::<f64>()
            + l2 * w.iter().map(|v| v * v).sum::<f64>()
    };

    for _ in 0..opts.max_sweeps {
        let mut max_step = 0.0f64;
        for j in 0..p {
            if norms[j] + l2 == 0.0 {
                continue;
            }
            let col = &cols[j];
            let old = w[j];
            let rho: f64 = col.iter().zip(&resid).map(|(c, r)| c * r).sum::<f64>() + norms[j] * old;
            let new = soft_threshold(rho, l1 / 2.0) / (norms[j] + l2);
            if new != old {
                let delta = new - old;
                for (r, c) in resid.iter_mut().zip(col) {
                    *r -= c * delta;
                }
                w[j] = new;
                max_step = max_step.max(delta.abs());
            }
        }
        trace.push(objective(&w, &resid));
        let scale = w.iter().fold(1.0f64, |a, v| a.max(v.abs()));
        if max_step <= opts.tol * scale {
            return Ok((assemble(DVector::from_vec(w), &x_means, y_mean), trace));
        }
    }
    Err(Error::NonConvergence {
        model: "coordinate descent",
        iterations: opts.max_sweeps,
        residual: trace.last().copied().unwrap_or(f64::NAN),
    })
}

/// Evidence-maximizing Bayesian ridge: Gaussian likelihood with precision α,
/// Gaussian weight prior with precision λ, Gamma(1e-6, 1e-6) hyperpriors on both.
pub fn fit_bayesian_ridge(x: &[Vec<f64>], y: &[f64]) -> Result<LinearModel> {
    const HYPER: f64 = 1e-6;
    const TOL: f64 = 1e-3;
    const MAX_ITER: usize = 300;

    let xm = design(x);
    let x_means = column_means(&xm);
    let xc = centered(&xm, &x_means);
    let yv = labels(y);
    let y_mean = yv.mean();
    let yc = yv.add_scalar(-y_mean);
    let n = xc.nrows() as f64;
    let p = xc.ncols();

    let eig = SymmetricEigen::new(xc.transpose() * &xc);
    let evals: Vec<f64> = eig.eigenvalues.iter().map(|&v| v.max(0.0)).collect();
    let v = &eig.eigenvectors;
    let vt_xty = v.transpose() * (xc.transpose() * &yc);

    let var_y = yc.norm_squared() / n;
    let mut alpha = 1.0 / (var_y + f64::EPSILON);
    let mut lambda = 1.0;
    let coef_for = |alpha: f64, lambda: f64| -> DVector<f64> {
        let scaled = DVector::from_iterator(
            p,
            (0..p).map(|i| vt_xty[i] / (evals[i] + lambda / alpha)),
        );
        v * scaled
    };

    let mut coef = coef_for(alpha, lambda);
    for iter in 0..MAX_ITER {
        let sse = (&yc - &xc * &coef).norm_squared();
        let gamma: f64 = evals.iter().map(|&s| alpha * s / (lambda + alpha * s)).sum();
        lambda = (gamma + 2.0 * HYPER) / (coef.norm_squared() + 2.0 * HYPER);
        alpha = (n - gamma + 2.0 * HYPER) / (sse + 2.0 * HYPER);
        let next = coef_for(alpha, lambda);
        let change: f64 = (&next - &coef).iter().map(|d| d.abs()).sum();
        coef = next;
        if iter > 0 && change < TOL {
            return Ok(assemble(coef, &x_means, y_mean));
        }
    }
    Err(Error::NonConvergence {
        model: "bayesian ridge",
        iterations: MAX_ITER,
        residual: (&yc - &xc * &coef).norm_squared(),
    })
}

/// Huber loss `H_ε` plus `λ |w|^2`, solved by iteratively reweighted least squares.
pub fn fit_huber(x: &[Vec<f64>], y: &[f64], epsilon: f64, lambda: f64) -> Result<LinearModel> {
    const MAX_ITER: usize = 100;
    const TOL: f64 = 1e-5;

    let xm = design(x);
    let yv = labels(y);
    let (n, p) = (xm.nrows(), xm.ncols());
    let mut weights = vec![1.0; n];
    let mut model: Option<LinearModel> = None;
    let mut last_change = f64::INFINITY;

    for _ in 0..MAX_ITER {
        // Weighted, centered ridge step: minimize sum w_i r_i^2 / 2 + λ|w|^2.
        let wsum: f64 = weights.iter().sum();
        let x_means = DVector::from_iterator(
            p,
            (0..p).map(|j| (0..n).map(|i| weights[i] * xm[(i, j)]).sum::<f64>() / wsum),
        );
        let y_mean = (0..n).map(|i| weights[i] * yv[i]).sum::<f64>() / wsum;
        let xc = centered(&xm, &x_means);
        let mut xw = xc.clone();
        for (i, mut row) in xw.row_iter_mut().enumerate() {
            row *= weights[i];
        }
        let mut gram = xw.transpose() * &xc;
        for i in 0..p {
            gram[(i, i)] += 2.0 * lambda;
        }
        let rhs = xw.transpose() * yv.add_scalar(-y_mean);
        let w = solve_normal(&gram, &rhs, Singular::Fail)?;
        let next = assemble(w, &x_means, y_mean);

        for (i, row) in x.iter().enumerate() {
            let r = (y[i] - next.predict(row)).abs();
            weights[i] = if r <= epsilon { 1.0 } else { epsilon / r };
        }
        if let Some(prev) = &model {
            last_change = std::iter::once(next.intercept - prev.intercept)
                .chain(next.weights.iter().zip(&prev.weights).map(|(a, b)| a - b))
                .fold(0.0f64, |acc, d| acc.max(d.abs()));
        }
        model = Some(next);
        if last_change < TOL {
            return Ok(model.expect("set above"));
        }
    }
    Err(Error::NonConvergence {
        model: "huber",
        iterations: MAX_ITER,
        residual: last_change,
    })
}

/// Huber loss of one residual.
pub fn huber_loss(r: f64, epsilon: f64) -> f64 {
    if r.abs() <= epsilon {
        0.5 * r * r
    } else {
        epsilon * (r.abs() - epsilon / 2.0)
    }
}
