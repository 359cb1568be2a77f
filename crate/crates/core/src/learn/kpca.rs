use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::kernel::GramMatrix;
use crate::linalg::symmetric_eigen;

/// Kernel principal component coordinates, one row per item: eigenvectors of
/// the doubly centered Gram matrix scaled by the square roots of their
/// eigenvalues, largest first. Eigenvalues below `1e-12` of the largest are
/// rounding noise and give zero coordinates.
pub fn kernel_pca(k: &GramMatrix, n_components: usize) -> Result<DMatrix<f64>> {
    let m = k.len();
    if n_components > m {
        return Err(Error::param(
            "n_components",
            format!("{n_components} components requested for {m} items"),
        ));
    }
    if m == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    let row_mean: Vec<f64> = (0..m).map(|i| k.matrix.row(i).sum() / m as f64).collect();
    let total = row_mean.iter().sum::<f64>() / m as f64;
    let centered = DMatrix::from_fn(m, m, |i, j| k.matrix[(i, j)] - row_mean[i] - row_mean[j] + total);
    let centered = (&centered + centered.transpose()) * 0.5;
    let (values, vectors) = symmetric_eigen(&centered)?;
    // Descending order.
    let order: Vec<usize> = (0..m).rev().collect();
    let floor = values[m - 1].abs() * 1e-12;
    let mut out = DMatrix::zeros(m, n_components);
    for (c, &idx) in order.iter().take(n_components).enumerate() {
        let scale = if values[idx] > floor { values[idx].sqrt() } else { 0.0 };
        let v = vectors.column(idx);
        // Sign convention: largest-magnitude entry positive.
        let pivot = v.iter().copied().fold(0.0f64, |a, x| if x.abs() > a.abs() { x } else { a });
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        for i in 0..m {
            out[(i, c)] = sign * scale * v[i];
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_items_collapse_to_origin() {
        let k = GramMatrix::from_matrix(DMatrix::from_element(4, 4, 1.0), true).unwrap();
        let x = kernel_pca(&k, 2).unwrap();
        assert!(x.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn two_orthogonal_items_are_symmetric() {
        let k = GramMatrix::from_matrix(DMatrix::identity(2, 2), true).unwrap();
        let x = kernel_pca(&k, 2).unwrap();
        assert!((x[(0, 0)] + x[(1, 0)]).abs() < 1e-12);
        assert!((x[(0, 0)].abs() - 0.5f64.sqrt()).abs() < 1e-12);
        assert!(x.column(1).iter().all(|v| v.abs() < 1e-12));
        assert!(kernel_pca(&k, 3).is_err());
    }
}
