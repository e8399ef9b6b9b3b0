//! Shift-invert Arnoldi with thick restarts on an orthonormalised Ritz basis.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::banded::BandLu;
use crate::linalg::dense;
use crate::linalg::sparse::{dot, norm2, CsrMatrix};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArnoldiOptions {
    /// Krylov dimension; 0 picks `max(2k + 10, 30)`.
    pub krylov_dim: usize,
    /// Relative Ritz residual tolerance in the inverted spectrum.
    pub tol: f64,
    pub max_restarts: usize,
    pub seed: u64,
}

impl Default for ArnoldiOptions {
    fn default() -> Self {
        Self { krylov_dim: 0, tol: 1e-13, max_restarts: 400, seed: 0x5eed }
    }
}

/// Eigenvalue, unit eigenvector and the directly recomputed residual `‖Ax - λx‖`.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub value: Complex64,
    pub vector: Vec<Complex64>,
    pub residual: f64,
}

/// The `k` eigenvalues of `a` closest to `target`.
///
/// A singular factorization moves the shift by a small relative amount and retries.
pub fn shift_invert_eigs(a: &CsrMatrix, target: Complex64, k: usize, opts: &ArnoldiOptions) -> Result<Vec<EigenPair>> {
    let n = a.dim();
    if k == 0 {
        return Ok(Vec::new());
    }
    if k > n {
        return Err(Error::invalid(format!("requested {k} eigenvalues of a {n}x{n} matrix")));
    }
    let mut shift = target;
    let mut lu = None;
    for attempt in 0..6 {
        match BandLu::factor(a, shift) {
            Ok(f) => {
                lu = Some(f);
                break;
            }
            Err(Error::SingularPivot { .. }) => {
                let bump = 1e-10 * (1.0 + target.norm()) * 10f64.powi(attempt);
                shift = target + Complex64::new(bump, 0.7 * bump);
            }
            Err(e) => return Err(e),
        }
    }
    let lu = lu.ok_or_else(|| Error::NoConvergence(format!("no regular shift found near {target}")))?;
    let op = |x: &[Complex64]| {
        let mut y = x.to_vec();
        lu.solve(&mut y);
        y
    };
    let (thetas, vectors) = arnoldi_largest(op, n, k, opts)?;
    let mut pairs: Vec<EigenPair> = thetas
        .into_iter()
        .zip(vectors)
        .map(|(theta, x)| {
            let value = shift + theta.inv();
            let ax = a.apply(&x);
            let r: Vec<Complex64> = ax.iter().zip(&x).map(|(p, q)| p - value * q).collect();
            EigenPair { value, residual: norm2(&r) / norm2(&x), vector: x }
        })
        .collect();
    pairs.sort_by(|p, q| (p.value - target).norm().total_cmp(&(q.value - target).norm()));
    Ok(pairs)
}

/// Arnoldi for the `k` eigenvalues of largest modulus of the linear map `op`.
pub fn arnoldi_largest<F>(op: F, n: usize, k: usize, opts: &ArnoldiOptions) -> Result<(Vec<Complex64>, Vec<Vec<Complex64>>)>
where
    F: Fn(&[Complex64]) -> Vec<Complex64>,
{
    let m = if opts.krylov_dim == 0 { (2 * k + 10).max(30) } else { opts.krylov_dim }.min(n);
    if k > m {
        return Err(Error::invalid("Krylov dimension smaller than the number of wanted eigenvalues"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut v0: Vec<Complex64> = (0..n)
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    let nv = norm2(&v0);
    v0.iter_mut().for_each(|x| *x /= nv);

    // basis vectors V[0..=m], projected matrix H ((m+1) x m, row-major)
    let mut basis: Vec<Vec<Complex64>> = vec![v0];
    let mut h = vec![ZERO; (m + 1) * m];
    let mut start = 0;
    for _restart in 0..opts.max_restarts {
        let mut size = m;
        for j in start..m {
            let mut w = op(&basis[j]);
            for _pass in 0..2 {
                for (i, v) in basis.iter().enumerate().take(j + 1) {
                    let c = dot(v, &w);
                    h[i * m + j] += c;
                    w.iter_mut().zip(v).for_each(|(x, y)| *x -= c * y);
                }
            }
            let beta = norm2(&w);
            h[(j + 1) * m + j] = Complex64::new(beta, 0.0);
            let scale = (0..=j).map(|i| h[i * m + j].norm()).fold(0.0, f64::max);
            if beta <= 1e-14 * scale.max(1e-300) {
                // invariant subspace: the projected problem is exact
                size = j + 1;
                basis.truncate(j + 1);
                break;
            }
            w.iter_mut().for_each(|x| *x /= beta);
            basis.push(w);
        }

        let hm: Vec<Complex64> = (0..size).flat_map(|i| (0..size).map(move |j| (i, j))).map(|(i, j)| h[i * m + j]).collect();
        let (vals, vecs) = dense::eigen(&hm, size)?;
        let mut order: Vec<usize> = (0..size).collect();
        order.sort_by(|&a, &b| vals[b].norm().total_cmp(&vals[a].norm()));
        let col = |c: usize| -> Vec<Complex64> {
            let y: Vec<Complex64> = (0..size).map(|i| vecs[i * size + c]).collect();
            let ny = norm2(&y);
            y.into_iter().map(|x| x / ny).collect()
        };
        let exact = size < m;
        let want = k.min(size);
        let converged = order.iter().take(want).all(|&c| {
            if exact {
                return true;
            }
            let y = col(c);
            let rho: Complex64 = (0..size).map(|i| h[size * m + i] * y[i]).sum();
            rho.norm() <= opts.tol * vals[c].norm()
        });
        if converged {
            let mut thetas = Vec::with_capacity(want);
            let mut out = Vec::with_capacity(want);
            for &c in order.iter().take(want) {
                let y = col(c);
                let mut x = vec![ZERO; n];
                for (i, v) in basis.iter().enumerate().take(size) {
                    x.iter_mut().zip(v).for_each(|(p, q)| *p += y[i] * q);
                }
                let nx = norm2(&x);
                x.iter_mut().for_each(|p| *p /= nx);
                thetas.push(vals[c]);
                out.push(x);
            }
            return Ok((thetas, out));
        }
        if exact {
            break;
        }

        // thick restart on an orthonormal basis of the wanted Ritz vectors
        let keep_target = (k + (m - k) / 2).min(m - 1).max(k);
        let mut q: Vec<Vec<Complex64>> = Vec::with_capacity(keep_target);
        for &c in order.iter().take(keep_target) {
            let mut y = col(c);
            for _pass in 0..2 {
                for prev in &q {
                    let d = dot(prev, &y);
                    y.iter_mut().zip(prev).for_each(|(a, b)| *a -= d * b);
                }
            }
            let ny = norm2(&y);
            if ny > 1e-8 {
                y.iter_mut().for_each(|a| *a /= ny);
                q.push(y);
            }
        }
        let p = q.len();
        let mut new_basis: Vec<Vec<Complex64>> = Vec::with_capacity(m + 1);
        for qc in &q {
            let mut x = vec![ZERO; n];
            for (i, v) in basis.iter().enumerate().take(m) {
                let coef = qc[i];
                x.iter_mut().zip(v).for_each(|(a, b)| *a += coef * b);
            }
            new_basis.push(x);
        }
        new_basis.push(basis[m].clone());
        let mut hn = vec![ZERO; (m + 1) * m];
        // Qᴴ H_m Q
        let mut hq = vec![ZERO; m * p];
        for i in 0..m {
            for c in 0..p {
                hq[i * p + c] = (0..m).map(|l| h[i * m + l] * q[c][l]).sum();
            }
        }
        for r in 0..p {
            for c in 0..p {
                hn[r * m + c] = (0..m).map(|i| q[r][i].conj() * hq[i * p + c]).sum();
            }
        }
        for c in 0..p {
            hn[p * m + c] = (0..m).map(|i| h[m * m + i] * q[c][i]).sum();
        }
        basis = new_basis;
        h = hn;
        start = p;
    }
    Err(Error::NoConvergence(format!("Arnoldi did not converge for {k} eigenvalues within {} restarts", opts.max_restarts)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn diagonal_target() {
        let a = CsrMatrix::diagonal(&[c(1.0, 0.0), c(0.0, 2.0), c(-3.0, 0.0)]);
        let pairs = shift_invert_eigs(&a, c(0.0, 2.0), 1, &ArnoldiOptions::default()).unwrap();
        assert!((pairs[0].value - c(0.0, 2.0)).norm() < 1e-12);
    }

    #[test]
    fn laplacian_lowest_modes() {
        let n = 400;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, c(2.0, 0.0)));
            if i + 1 < n {
                t.push((i, i + 1, c(-1.0, 0.0)));
                t.push((i + 1, i, c(-1.0, 0.0)));
            }
        }
        let a = CsrMatrix::from_triplets(n, t);
        let pairs = shift_invert_eigs(&a, c(0.0, 0.0), 6, &ArnoldiOptions::default()).unwrap();
        let h = std::f64::consts::PI / (n as f64 + 1.0);
        for (k, p) in pairs.iter().enumerate() {
            let exact = 2.0 - 2.0 * (h * (k + 1) as f64).cos();
            assert!((p.value.re - exact).abs() < 1e-12, "{k}: {} vs {exact}", p.value);
            assert!(p.value.im.abs() < 1e-10);
            assert!(p.residual < 1e-10);
        }
    }

    #[test]
    fn many_eigenvalues_need_restarts() {
        // non-normal bidiagonal with a spread spectrum
        let n = 300;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, c(i as f64 * 0.01, (i as f64 * 0.37).sin() * 0.05)));
            if i + 1 < n {
                t.push((i, i + 1, c(0.02, 0.0)));
            }
        }
        let a = CsrMatrix::from_triplets(n, t);
        let target = c(1.503, 0.01);
        let opts = ArnoldiOptions { krylov_dim: 24, ..Default::default() };
        let pairs = shift_invert_eigs(&a, target, 8, &opts).unwrap();
        let mut exact: Vec<Complex64> = (0..n).map(|i| c(i as f64 * 0.01, (i as f64 * 0.37).sin() * 0.05)).collect();
        exact.sort_by(|p, q| (p - target).norm().total_cmp(&(q - target).norm()));
        for (p, e) in pairs.iter().zip(&exact) {
            assert!((p.value - e).norm() < 1e-9, "{} vs {e}", p.value);
        }
    }

    #[test]
    fn singular_shift_is_perturbed() {
        let a = CsrMatrix::diagonal(&[c(1.0, 0.0), c(2.0, 0.0), c(5.0, 0.0), c(7.0, 0.0)]);
        let pairs = shift_invert_eigs(&a, c(2.0, 0.0), 1, &ArnoldiOptions::default()).unwrap();
        assert!((pairs[0].value - c(2.0, 0.0)).norm() < 1e-9);
    }
}
