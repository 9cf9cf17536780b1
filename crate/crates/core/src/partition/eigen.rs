//! Dense symmetric eigensolver for normalized Laplacians.

use faer::{Mat, Side};
use nalgebra::{DMatrix, SymmetricEigen};

/// Every eigenpair of a symmetric matrix, eigenvalues ascending. Ties keep
/// the solver's column order.
pub(crate) fn dense_eigen(a: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let mat = Mat::<f64>::from_fn(n, n, |i, j| a[(i, j)]);
    let (values, vectors) = match mat.self_adjoint_eigen(Side::Lower) {
        Ok(eig) => {
            let s = eig.S().column_vector();
            let u = eig.U();
            ((0..n).map(|i| s[i]).collect::<Vec<f64>>(), DMatrix::from_fn(n, n, |i, j| u[(i, j)]))
        }
        Err(_) => {
            let eig = SymmetricEigen::new(a.clone());
            (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
        }
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| values[x].total_cmp(&values[y]).then(x.cmp(&y)));
    let sorted = DMatrix::from_fn(n, n, |i, j| vectors[(i, order[j])]);
    (order.iter().map(|&i| values[i]).collect(), sorted)
}
