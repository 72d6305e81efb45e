use nalgebra::{DMatrix, DVector};

use crate::Real;

pub(crate) fn singular_values<T: Real>(m: &DMatrix<T>) -> DVector<T> {
    if m.is_empty() {
        return DVector::zeros(0);
    }
    m.clone().svd(false, false).singular_values
}

/// Number of singular values above `tol · σ_max`.
pub(crate) fn numerical_rank<T: Real>(m: &DMatrix<T>, tol: T) -> usize {
    let sv = singular_values(m);
    let smax = sv.iter().fold(T::zero(), |a, &b| a.max(b));
    if smax == T::zero() {
        return 0;
    }
    sv.iter().filter(|&&s| s > tol * smax).count()
}

/// Least-squares solution of `m x ≈ b` (minimum norm) and the residual `‖m x − b‖₂`.
pub(crate) fn least_squares<T: Real>(m: &DMatrix<T>, b: &DVector<T>, tol: T) -> (DVector<T>, T) {
    if m.ncols() == 0 {
        return (DVector::zeros(0), b.norm());
    }
    let svd = m.clone().svd(true, true);
    let smax = svd.singular_values.iter().fold(T::zero(), |a, &s| a.max(s));
    if smax == T::zero() {
        return (DVector::zeros(m.ncols()), b.norm());
    }
    let x = svd.solve(b, tol * smax).unwrap_or_else(|_| DVector::zeros(m.ncols()));
    let r = (m * &x - b).norm();
    (x, r)
}

/// Row-major vectorization: rows of `m` concatenated.
pub(crate) fn vec_rows<T: Real>(m: &DMatrix<T>) -> DVector<T> {
    DVector::from_iterator(m.len(), (0..m.nrows()).flat_map(|i| (0..m.ncols()).map(move |j| m[(i, j)])))
}

pub(crate) fn stack_rows<T: Real>(parts: &[&DMatrix<T>]) -> DMatrix<T> {
    let ncols = parts.first().map_or(0, |p| p.ncols());
    let nrows = parts.iter().map(|p| p.nrows()).sum();
    let mut out = DMatrix::zeros(nrows, ncols);
    let mut r = 0;
    for p in parts {
        out.view_mut((r, 0), (p.nrows(), ncols)).copy_from(p);
        r += p.nrows();
    }
    out
}

pub(crate) fn spectral_norm<T: Real>(m: &DMatrix<T>) -> T {
    singular_values(m).iter().fold(T::zero(), |a, &s| a.max(s))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_of_outer_product() {
        let u = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        let v = DVector::from_vec(vec![1.0, -1.0]);
        assert_eq!(numerical_rank(&(&u * v.transpose()), 1e-9), 1);
        assert_eq!(numerical_rank(&DMatrix::<f64>::zeros(3, 2), 1e-9), 0);
    }

    #[test]
    fn least_squares_residual() {
        let m = DMatrix::<f64>::from_row_slice(3, 1, &[1.0, 0.0, 0.0]);
        let b = DVector::from_vec(vec![2.0, 3.0, 4.0]);
        let (x, r) = least_squares(&m, &b, 1e-12);
        assert!((x[0] - 2.0).abs() < 1e-12);
        assert!((r - 5.0).abs() < 1e-12);
    }

    #[test]
    fn row_major_vectorization() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(vec_rows(&m).as_slice(), &[1.0, 2.0, 3.0, 4.0]);
    }
}
