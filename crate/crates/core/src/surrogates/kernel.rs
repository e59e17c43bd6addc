//! RBF kernel ridge regression: `(K + λI) α = y`, `f(x) = Σ α_i k(x_i, x)`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::linalg::{solve_normal, Singular};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelRidgeModel {
    pub gamma: f64,
    pub support: Vec<Vec<f64>>,
    pub dual: Vec<f64>,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

/// `1 / (m · Var(X))` over all feature entries; 1 when the features are constant.
pub fn scale_gamma(x: &[Vec<f64>]) -> f64 {
    let m = x.first().map_or(0, Vec::len);
    let count = (x.len() * m) as f64;
    if count == 0.0 {
        return 1.0;
    }
    let mean = x.iter().flatten().sum::<f64>() / count;
    let var = x.iter().flatten().map(|v| (v - mean).powi(2)).sum::<f64>() / count;
    if var > 0.0 {
        1.0 / (m as f64 * var)
    } else {
        1.0
    }
}

pub fn fit_kernel_ridge(
    x: &[Vec<f64>],
    y: &[f64],
    lambda: f64,
    gamma: Option<f64>,
    max_rows: usize,
) -> Result<KernelRidgeModel> {
    if x.len() > max_rows {
        return Err(Error::InvalidArgument(format!(
            "kernel ridge is limited to {max_rows} training rows (dense {0}x{0} system); got {1}",
            max_rows,
            x.len()
        )));
    }
    let gamma = gamma.unwrap_or_else(|| scale_gamma(x));
    let n = x.len();
    let mut k = DMatrix::from_fn(n, n, |i, j| (-gamma * sq_dist(&x[i], &x[j])).exp());
    for i in 0..n {
        k[(i, i)] += lambda;
    }
    let dual = solve_normal(&k, &DVector::from_row_slice(y), Singular::Fail)?;
    Ok(KernelRidgeModel {
        gamma,
        support: x.to_vec(),
        dual: dual.iter().copied().collect(),
    })
}

impl KernelRidgeModel {
    pub fn predict(&self, x: &[f64]) -> f64 {
        self.support
            .iter()
            .zip(&self.dual)
            .map(|(s, a)| a * (-self.gamma * sq_dist(s, x)).exp())
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tiny_lambda_interpolates() {
        let x = vec![vec![0.0], vec![0.5], vec![1.0]];
        let y = [0.1, 0.7, 0.2];
        let m = fit_kernel_ridge(&x, &y, 1e-10, Some(3.0), 100).unwrap();
        for (r, t) in x.iter().zip(y) {
            assert!((m.predict(r) - t).abs() < 1e-6);
        }
    }

    #[test]
    fn row_cap() {
        assert!(fit_kernel_ridge(&vec![vec![0.0]; 5], &[0.0; 5], 1.0, None, 4).is_err());
    }
}
