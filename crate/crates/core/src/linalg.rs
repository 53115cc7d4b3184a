//! Small dense helpers shared across modules.

use nalgebra::DMatrix;

/// Largest singular value; zero for an empty matrix.
pub(crate) fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    if m.ncols() == 1 {
        return m.column(0).norm();
    }
    m.singular_values().max()
}

/// Smallest of the `min(rows, cols)` singular values.
pub(crate) fn smallest_singular_value(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    if m.ncols() == 1 {
        return m.column(0).norm();
    }
    m.singular_values().min()
}

/// 2-norm condition number of a square or tall matrix.
pub(crate) fn condition_number(m: &DMatrix<f64>) -> f64 {
    let sv = m.singular_values();
    let min = sv.min();
    if min <= 0.0 || !min.is_finite() {
        return f64::INFINITY;
    }
    sv.max() / min
}

/// `x - B Bᵀ x` column by column, for `B` with orthonormal columns.
pub(crate) fn orthogonal_residual(basis: &DMatrix<f64>, x: &DMatrix<f64>) -> DMatrix<f64> {
    let coeffs = basis.transpose() * x;
    x - basis * coeffs
}

/// Solves `R X = B` by back substitution for upper-triangular `R`.
///
/// Entries of `R` below the diagonal are never read. Returns `None` when a
/// diagonal entry is zero or the result is not finite.
pub(crate) fn solve_upper_triangular(r: &DMatrix<f64>, b: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let n = r.nrows();
    debug_assert_eq!(r.ncols(), n);
    debug_assert_eq!(b.nrows(), n);
    let mut x = b.clone();
    for col in 0..b.ncols() {
        for i in (0..n).rev() {
            let mut acc = x[(i, col)];
            for j in i + 1..n {
                acc -= r[(i, j)] * x[(j, col)];
            }
            let diag = r[(i, i)];
            if diag == 0.0 {
                return None;
            }
            x[(i, col)] = acc / diag;
        }
    }
    if x.iter().all(|v| v.is_finite()) {
        Some(x)
    } else {
        None
    }
}

pub(crate) fn is_finite(m: &DMatrix<f64>) -> bool {
    m.iter().all(|v| v.is_finite())
}


#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;

    #[test]
    fn back_substitution_matches_hand_solution() {
        // [[2, 1], [0, 4]] x = (5, 8)  =>  x = (1.5, 2)
        let r = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 0.0, 4.0]);
        let b = DMatrix::from_column_slice(2, 1, &[5.0, 8.0]);
        let x = solve_upper_triangular(&r, &b).unwrap();
        assert_eq!(x[(0, 0)], 1.5);
        assert_eq!(x[(1, 0)], 2.0);
    }

    #[test]
    fn back_substitution_ignores_lower_part_and_rejects_zero_pivot() {
        let r = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 99.0, 1.0]);
        let b = DMatrix::identity(2, 2);
        assert_eq!(solve_upper_triangular(&r, &b).unwrap(), DMatrix::identity(2, 2));
        let singular = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 0.0]);
        assert!(solve_upper_triangular(&singular, &b).is_none());
    }

    #[test]
    fn norms_of_diagonal() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, 0.5]));
        assert!((spectral_norm(&m) - 3.0).abs() < 1e-15);
        assert!((smallest_singular_value(&m) - 0.5).abs() < 1e-15);
        assert!((condition_number(&m) - 6.0).abs() < 1e-14);
    }
}
