use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

/// Eigenpairs of a real symmetric matrix, ascending in energy.
pub(crate) fn eigh(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = DVector::from_iterator(order.len(), order.iter().map(|&i| eig.eigenvalues[i]));
    let vectors = DMatrix::from_fn(m.nrows(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// exp(−i·h) for a Hermitian `h`.
pub(crate) fn expm_neg_i_hermitian(h: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let n = h.nrows();
    if n == 1 {
        let phase = h[(0, 0)].re;
        return DMatrix::from_element(1, 1, Complex64::from_polar(1.0, -phase));
    }
    let eig = SymmetricEigen::new(h.clone());
    let v = &eig.eigenvectors;
    let d = DMatrix::from_diagonal(&DVector::from_iterator(
        n,
        eig.eigenvalues.iter().map(|&e| Complex64::from_polar(1.0, -e)),
    ));
    v * d * v.adjoint()
}
