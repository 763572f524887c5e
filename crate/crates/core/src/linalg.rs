//! Small dense least-squares and rank helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Least-squares solution of `A x ≈ b` with columns equilibrated first.
pub fn least_squares(rows: &[Vec<f64>], rhs: &[f64]) -> Result<Vec<f64>> {
    let m = rows.len();
    let n = rows.first().map_or(0, Vec::len);
    if m < n || n == 0 || rhs.len() != m {
        return Err(Error::Invalid(format!(
            "least squares needs at least as many rows ({m}) as columns ({n})"
        )));
    }
    let mut a = DMatrix::from_fn(m, n, |i, j| rows[i][j]);
    let mut scale = vec![1.0; n];
    for (j, sc) in scale.iter_mut().enumerate() {
        let norm = a.column(j).norm();
        if norm > 0.0 {
            *sc = norm;
            a.column_mut(j).scale_mut(1.0 / norm);
        }
    }
    let b = DVector::from_column_slice(rhs);
    let svd = a.svd(true, true);
    let eps = f64::EPSILON * m.max(n) as f64 * svd.singular_values.max();
    let x = svd
        .solve(&b, eps)
        .map_err(|e| Error::Invalid(format!("least squares failed: {e}")))?;
    Ok(x.iter().zip(&scale).map(|(v, s)| v / s).collect())
}

/// Singular values of the matrix with the given rows, largest first.
pub fn singular_values(rows: &[Vec<f64>]) -> Vec<f64> {
    let m = rows.len();
    let n = rows.first().map_or(0, Vec::len);
    if m == 0 || n == 0 {
        return Vec::new();
    }
    let a = DMatrix::from_fn(m, n, |i, j| rows[i][j]);
    let mut sv: Vec<f64> = a.singular_values().iter().copied().collect();
    sv.sort_by(|x, y| y.total_cmp(x));
    sv
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line_fit() {
        let rows: Vec<Vec<f64>> = (0..5).map(|i| vec![1.0, i as f64]).collect();
        let rhs: Vec<f64> = (0..5).map(|i| 2.0 + 3.0 * i as f64).collect();
        let x = least_squares(&rows, &rhs).unwrap();
        assert!((x[0] - 2.0).abs() < 1e-13 && (x[1] - 3.0).abs() < 1e-13);
    }

    #[test]
    fn rank_deficient_values() {
        let sv = singular_values(&[vec![1.0, 2.0], vec![2.0, 4.0]]);
        assert!(sv[1].abs() < 1e-14 && sv[0] > 1.0);
    }
}
