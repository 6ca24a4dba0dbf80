//! Small dense vector helpers and the few factorizations the crate needs.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// `y += alpha * x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn all_finite(a: &[f64]) -> bool {
    a.iter().all(|v| v.is_finite())
}

/// Coordinate-wise mean of equally long vectors.
pub fn mean_of(vectors: &[&[f64]]) -> Vec<f64> {
    let d = vectors.first().map_or(0, |v| v.len());
    let mut out = vec![0.0; d];
    for v in vectors {
        axpy(1.0, v, &mut out);
    }
    let inv = 1.0 / vectors.len().max(1) as f64;
    out.iter_mut().for_each(|x| *x *= inv);
    out
}

pub fn mat_vec(m: &DMatrix<f64>, v: &[f64]) -> Vec<f64> {
    (m * DVector::from_column_slice(v)).as_slice().to_vec()
}

/// Eigenvalues of a symmetric matrix in ascending order.
pub fn sym_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(m.clone()).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

/// Solve `a x = rhs` for symmetric positive definite `a`.
///
/// Fails with [`Error::SingularSystem`] when the Cholesky factorization
/// breaks down or the solution residual is not small.
pub fn spd_solve(a: &DMatrix<f64>, rhs: &[f64]) -> Result<Vec<f64>> {
    let b = DVector::from_column_slice(rhs);
    let chol = a
        .clone()
        .cholesky()
        .ok_or_else(|| Error::SingularSystem("matrix is not positive definite".into()))?;
    let x = chol.solve(&b);
    check_residual(a, &x, &b)?;
    Ok(x.as_slice().to_vec())
}

/// Solve a general square system by LU with partial pivoting.
pub fn lu_solve(a: &DMatrix<f64>, rhs: &[f64]) -> Result<Vec<f64>> {
    let b = DVector::from_column_slice(rhs);
    let x = a
        .clone()
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::SingularSystem("LU factorization is singular".into()))?;
    check_residual(a, &x, &b)?;
    Ok(x.as_slice().to_vec())
}

fn check_residual(a: &DMatrix<f64>, x: &DVector<f64>, b: &DVector<f64>) -> Result<()> {
    if !x.iter().all(|v| v.is_finite()) {
        return Err(Error::SingularSystem("non-finite solution".into()));
    }
    let r = (a * x - b).norm();
    let scale = a.norm() * x.norm() + b.norm();
    if r > 1e-8 * scale.max(1e-300) {
        return Err(Error::SingularSystem(format!("residual {r:e} too large")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_diagonal_system() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 5.0]));
        let x = spd_solve(&a, &[2.0, 5.0]).unwrap();
        assert!(x.iter().all(|v| (v - 1.0).abs() < 1e-15));
    }

    #[test]
    fn singular_system_is_rejected() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(matches!(spd_solve(&a, &[1.0, 0.0]), Err(Error::SingularSystem(_))));
        assert!(matches!(lu_solve(&a, &[1.0, 0.0]), Err(Error::SingularSystem(_))));
    }
}
