//! Dense symmetric eigensolver shared by the diffusion, kernel and learning
//! modules.
//!
//! nalgebra 0.33's `SymmetricEigen` returns inaccurate decompositions for some
//! graph Laplacians (reconstruction residuals near 1e-2), so the work is done
//! by faer and converted back.

use faer::{Mat, Side};
use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Eigenvalues in ascending order and the matching orthonormal eigenvectors
/// as columns. Only the lower triangle of `m` is read.
pub(crate) fn symmetric_eigen(m: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::Shape(format!("eigensolver needs a square matrix, got {}x{}", n, m.ncols())));
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numerical("non-finite entry in symmetric matrix".into()));
    }
    if n == 0 {
        return Ok((Vec::new(), DMatrix::zeros(0, 0)));
    }
    let a = Mat::<f64>::from_fn(n, n, |i, j| m[(i, j)]);
    let eig = a.selfadjoint_eigendecomposition(Side::Lower);
    let s = eig.s().column_vector();
    let u = eig.u();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| s.read(x).total_cmp(&s.read(y)));
    let values: Vec<f64> = order.iter().map(|&k| s.read(k)).collect();
    if values.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numerical("symmetric eigensolver produced a non-finite eigenvalue".into()));
    }
    let vectors = DMatrix::from_fn(n, n, |i, c| u.read(i, order[c]));
    Ok((values, vectors))
}
