use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Pivot ratio below which a Cholesky factor is treated as singular.
const PIVOT_RATIO: f64 = 1e-13;
/// Relative eigenvalue cutoff for the pseudo-inverse.
const PINV_CUTOFF: f64 = 1e-12;

pub(crate) fn design(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let p = rows.first().map_or(0, Vec::len);
    DMatrix::from_fn(rows.len(), p, |i, j| rows[i][j])
}

pub(crate) fn column_means(x: &DMatrix<f64>) -> DVector<f64> {
    let n = x.nrows().max(1) as f64;
    DVector::from_iterator(x.ncols(), x.column_iter().map(|c| c.sum() / n))
}

/// `x` with `means` subtracted from every row.
pub(crate) fn centered(x: &DMatrix<f64>, means: &DVector<f64>) -> DMatrix<f64> {
    let mut c = x.clone();
    for (j, mut col) in c.column_iter_mut().enumerate() {
        col.add_scalar_mut(-means[j]);
    }
    c
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Singular {
    /// Report rank deficiency as an error.
    Fail,
    /// Fall back to the minimum-norm pseudo-inverse solution.
    PseudoInverse,
}

/// Solves the symmetric positive semi-definite system `gram * x = rhs`.
pub(crate) fn solve_normal(gram: &DMatrix<f64>, rhs: &DVector<f64>, singular: Singular) -> Result<DVector<f64>> {
    let p = gram.nrows();
    if p == 0 {
        return Ok(DVector::zeros(0));
    }
    if let Some(chol) = gram.clone().cholesky() {
        let diag = chol.l_dirty().diagonal();
        let (lo, hi) = diag
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), &d| (lo.min(d * d), hi.max(d * d)));
        if hi > 0.0 && lo > PIVOT_RATIO * hi {
            return Ok(chol.solve(rhs));
        }
    }
    match singular {
        Singular::Fail => Err(Error::RankDeficient { columns: p }),
        Singular::PseudoInverse => Ok(pinv_solve(gram, rhs)),
    }
}

fn pinv_solve(gram: &DMatrix<f64>, rhs: &DVector<f64>) -> DVector<f64> {
    let eig = SymmetricEigen::new(gram.clone());
    let top = eig.eigenvalues.iter().fold(0.0f64, |a, &b| a.max(b));
    let cut = top * PINV_CUTOFF;
    let proj = eig.eigenvectors.transpose() * rhs;
    let scaled = DVector::from_iterator(
        proj.len(),
        proj.iter()
            .zip(eig.eigenvalues.iter())
            .map(|(&v, &l)| if l > cut { v / l } else { 0.0 }),
    );
    &eig.eigenvectors * scaled
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_spd() {
        let g = DMatrix::from_row_slice(2, 2, &[4.0, 1.0, 1.0, 3.0]);
        let b = DVector::from_row_slice(&[1.0, 2.0]);
        let x = solve_normal(&g, &b, Singular::Fail).unwrap();
        assert!((&g * &x - &b).norm() < 1e-12);
    }

    #[test]
    fn singular_system() {
        let g = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let b = DVector::from_row_slice(&[2.0, 2.0]);
        assert!(matches!(solve_normal(&g, &b, Singular::Fail), Err(Error::RankDeficient { .. })));
        let x = solve_normal(&g, &b, Singular::PseudoInverse).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] - 1.0).abs() < 1e-12);
    }
}
