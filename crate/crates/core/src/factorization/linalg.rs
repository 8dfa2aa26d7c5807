use nalgebra::{DMatrix, DVector};

use crate::error::{QrecError, Result};

const RESIDUAL_TOLERANCE: f64 = 1e-8;

/// Solves `A x = b` for a symmetric positive-definite `k × k` matrix given
/// row-major in `a`.
///
/// Fails if the factorisation breaks down or `‖A x − b‖` exceeds
/// `1e-8 · max(1, ‖b‖)`.
pub fn solve_spd(a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    let k = b.len();
    if a.len() != k * k {
        return Err(QrecError::Dimension(format!(
            "system matrix has {} entries for k = {k}",
            a.len()
        )));
    }
    let matrix = DMatrix::from_row_slice(k, k, a);
    let rhs = DVector::from_column_slice(b);
    let x = match matrix.clone().cholesky() {
        Some(chol) => chol.solve(&rhs),
        None => matrix.clone().lu().solve(&rhs).ok_or(QrecError::Solve {
            residual: f64::INFINITY,
            tolerance: RESIDUAL_TOLERANCE,
        })?,
    };
    let residual = (&matrix * &x - &rhs).norm();
    let tolerance = RESIDUAL_TOLERANCE * rhs.norm().max(1.0);
    if residual.is_nan() || residual > tolerance {
        return Err(QrecError::Solve { residual, tolerance });
    }
    Ok(x.iter().copied().collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_system() {
        let x = solve_spd(&[4.0, 1.0, 1.0, 3.0], &[1.0, 2.0]).unwrap();
        assert!((x[0] - 1.0 / 11.0).abs() < 1e-14);
        assert!((x[1] - 7.0 / 11.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_shapes_and_singular() {
        assert!(solve_spd(&[1.0, 0.0, 0.0], &[1.0, 1.0]).is_err());
        assert!(solve_spd(&[0.0, 0.0, 0.0, 0.0], &[1.0, 1.0]).is_err());
    }
}
