//! Dense eigensolvers (backed by faer) for the oracle route and small projected problems.

use faer::{Mat, Side};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::sparse::CsrMatrix;

/// Largest dimension accepted by the dense oracle.
pub const DENSE_LIMIT: usize = 2500;

fn to_mat(a: &[Complex64], n: usize) -> Mat<Complex64> {
    Mat::from_fn(n, n, |i, j| a[i * n + j])
}

/// All eigenvalues of a sparse matrix by a full dense non-Hermitian solve.
pub fn eigenvalues(a: &CsrMatrix) -> Result<Vec<Complex64>> {
    let n = a.dim();
    if n > DENSE_LIMIT {
        return Err(Error::Dense(format!("dimension {n} exceeds the dense limit {DENSE_LIMIT}")));
    }
    let m = to_mat(&a.to_dense(), n);
    m.eigenvalues().map_err(|e| Error::Dense(format!("{e:?}")))
}

/// Eigenvalues and right eigenvectors of a small row-major matrix; column `k` of
/// the returned row-major `n×n` array belongs to eigenvalue `k`.
pub fn eigen(a: &[Complex64], n: usize) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    let m = to_mat(a, n);
    let evd = m.eigen().map_err(|e| Error::Dense(format!("{e:?}")))?;
    let s = evd.S();
    let u = evd.U();
    let values = (0..n).map(|k| s[k]).collect();
    let mut vectors = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        for k in 0..n {
            vectors[i * n + k] = u[(i, k)];
        }
    }
    Ok((values, vectors))
}

/// Ascending eigenvalues and orthonormal eigenvectors (row-major, column `k` for
/// eigenvalue `k`) of a real symmetric row-major matrix.
pub fn symmetric_eigen(a: &[f64], n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let m = Mat::from_fn(n, n, |i, j| a[i * n + j]);
    let evd = m.self_adjoint_eigen(Side::Lower).map_err(|e| Error::Dense(format!("{e:?}")))?;
    let s = evd.S();
    let u = evd.U();
    let values = (0..n).map(|k| s[k]).collect();
    let mut vectors = vec![0.0; n * n];
    for i in 0..n {
        for k in 0..n {
            vectors[i * n + k] = u[(i, k)];
        }
    }
    Ok((values, vectors))
}

/// Ascending eigenvalues of a real symmetric row-major matrix.
pub fn symmetric_eigenvalues(a: &[f64], n: usize) -> Result<Vec<f64>> {
    let m = Mat::from_fn(n, n, |i, j| a[i * n + j]);
    m.self_adjoint_eigenvalues(Side::Lower).map_err(|e| Error::Dense(format!("{e:?}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_eigenvalues() {
        let d = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 2.0), Complex64::new(-3.0, 0.0)];
        let mut ev = eigenvalues(&CsrMatrix::diagonal(&d)).unwrap();
        ev.sort_by(|a, b| a.re.total_cmp(&b.re));
        assert!((ev[0] - d[2]).norm() < 1e-14);
        assert!((ev[1] - d[1]).norm() < 1e-14);
        assert!((ev[2] - d[0]).norm() < 1e-14);
    }

    #[test]
    fn eigenvectors_satisfy_definition() {
        let a = [
            Complex64::new(1.0, 1.0),
            Complex64::new(2.0, 0.0),
            Complex64::new(0.0, -1.0),
            Complex64::new(3.0, 0.5),
        ];
        let (vals, vecs) = eigen(&a, 2).unwrap();
        for k in 0..2 {
            for i in 0..2 {
                let av = a[i * 2] * vecs[k] + a[i * 2 + 1] * vecs[2 + k];
                assert!((av - vals[k] * vecs[i * 2 + k]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn symmetric_tridiagonal() {
        let n = 20;
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            a[i * n + i] = 2.0;
            if i + 1 < n {
                a[i * n + i + 1] = -1.0;
                a[(i + 1) * n + i] = -1.0;
            }
        }
        let ev = symmetric_eigenvalues(&a, n).unwrap();
        let h = std::f64::consts::PI / (n as f64 + 1.0);
        for (k, v) in ev.iter().enumerate() {
            let exact = 2.0 - 2.0 * (h * (k + 1) as f64).cos();
            assert!((v - exact).abs() < 1e-13);
        }
    }
}
