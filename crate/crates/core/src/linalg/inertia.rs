//! Sylvester inertia of real symmetric block-tridiagonal matrices.

use crate::error::{Error, Result};
use crate::linalg::dense::symmetric_eigen;
use crate::linalg::sparse::CsrMatrix;

/// Number of eigenvalues of `A` strictly below `shift`, for a real symmetric
/// matrix whose entries couple only neighbouring blocks of size `block`.
///
/// Block LDLᵀ: `D₀ = A₀₀ - σ`, `D_{k+1} = A_{k+1,k+1} - σ - B_kᵀ D_k⁻¹ B_k`, and the
/// inertia of `A - σ` is the sum of the inertias of the `D_k`.
pub fn count_below(a: &CsrMatrix, block: usize, shift: f64) -> Result<usize> {
    let n = a.dim();
    if block == 0 || n % block != 0 {
        return Err(Error::invalid(format!("block size {block} does not divide {n}")));
    }
    let nb = n / block;
    let m = block;
    let mut count = 0;
    let mut schur = vec![0.0; m * m];
    let mut prev_inv: Option<Vec<f64>> = None;
    let mut coupling = vec![0.0; m * m];
    for k in 0..nb {
        // diagonal block
        let off = k * m;
        schur.iter_mut().for_each(|x| *x = 0.0);
        for i in 0..m {
            for (j, v) in a.row(off + i) {
                if j >= off && j < off + m {
                    schur[i * m + (j - off)] = v.re;
                } else if j + m < off || j >= off + 2 * m {
                    return Err(Error::invalid("matrix is not block tridiagonal"));
                }
            }
            schur[i * m + i] -= shift;
        }
        if let Some(inv) = &prev_inv {
            // coupling B = A[k-1 block, k block]
            coupling.iter_mut().for_each(|x| *x = 0.0);
            let poff = off - m;
            for i in 0..m {
                for (j, v) in a.row(poff + i) {
                    if j >= off && j < off + m {
                        coupling[i * m + (j - off)] = v.re;
                    }
                }
            }
            // schur -= Bᵀ inv B
            let mut tmp = vec![0.0; m * m];
            for i in 0..m {
                for l in 0..m {
                    let bli = coupling[l * m + i];
                    if bli == 0.0 {
                        continue;
                    }
                    for j in 0..m {
                        tmp[i * m + j] += bli * inv[l * m + j];
                    }
                }
            }
            for i in 0..m {
                for j in 0..m {
                    let mut acc = 0.0;
                    for l in 0..m {
                        acc += tmp[i * m + l] * coupling[l * m + j];
                    }
                    schur[i * m + j] -= acc;
                }
            }
            // keep exact symmetry for the eigensolver
            for i in 0..m {
                for j in 0..i {
                    let avg = 0.5 * (schur[i * m + j] + schur[j * m + i]);
                    schur[i * m + j] = avg;
                    schur[j * m + i] = avg;
                }
            }
        }
        let (vals, vecs) = symmetric_eigen(&schur, m)?;
        let scale = vals.iter().fold(0.0f64, |acc, v| acc.max(v.abs())).max(1.0);
        let mut inv = vec![0.0; m * m];
        for (q, &lam) in vals.iter().enumerate() {
            if lam.abs() <= 1e-14 * scale {
                return Err(Error::SingularPivot { column: off + q });
            }
            if lam < 0.0 {
                count += 1;
            }
            let r = 1.0 / lam;
            for i in 0..m {
                let vi = vecs[i * m + q] * r;
                for j in 0..m {
                    inv[i * m + j] += vi * vecs[j * m + q];
                }
            }
        }
        prev_inv = Some(inv);
    }
    Ok(count)
}
