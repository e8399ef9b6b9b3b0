//! Complex banded LU with partial pivoting.
//!
//! Row-major band storage: entry `(i, j)` lives at `i*w + (j - i + kl)` with
//! `w = 2kl + ku + 1`, leaving room for the `kl` extra superdiagonals produced
//! by row interchanges. Multipliers are stored in place and not re-permuted,
//! so the interchanges are replayed during the solves.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::sparse::CsrMatrix;

#[derive(Debug, Clone)]
pub struct BandLu {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    band: Vec<Complex64>,
    pivots: Vec<usize>,
}

impl BandLu {
    /// Factors `A - shift·I`.
    pub fn factor(a: &CsrMatrix, shift: Complex64) -> Result<Self> {
        let n = a.dim();
        let (kl, ku) = a.bandwidth();
        let width = 2 * kl + ku + 1;
        let mut band = vec![Complex64::new(0.0, 0.0); n * width];
        for (i, j, v) in a.triplets() {
            band[i * width + j + kl - i] += v;
        }
        for i in 0..n {
            band[i * width + kl] -= shift;
        }
        let mut lu = Self { n, kl, ku, width, band, pivots: vec![0; n] };
        lu.eliminate()?;
        Ok(lu)
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        i * self.width + j + self.kl - i
    }

    fn eliminate(&mut self) -> Result<()> {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = self.band[self.idx(k, k)].norm();
            for r in k + 1..=last_row {
                let v = self.band[self.idx(r, k)].norm();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if best == 0.0 {
                return Err(Error::SingularPivot { column: k });
            }
            self.pivots[k] = p;
            let last_col = (k + kl + ku).min(n - 1);
            if p != k {
                for j in k..=last_col {
                    let (a, b) = (self.idx(k, j), self.idx(p, j));
                    self.band.swap(a, b);
                }
            }
            let pivot = self.band[self.idx(k, k)];
            let inv = pivot.inv();
            let row_k = self.idx(k, k);
            for r in k + 1..=last_row {
                let ir = self.idx(r, k);
                let l = self.band[ir] * inv;
                self.band[ir] = l;
                if l == Complex64::new(0.0, 0.0) {
                    continue;
                }
                // row r columns k+1..=last_col, row k likewise: both contiguous in storage
                let len = last_col - k;
                let (src, dst) = (row_k + 1, ir + 1);
                for t in 0..len {
                    let u = self.band[src + t];
                    self.band[dst + t] -= l * u;
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves `(A - σ) x = b` in place.
    pub fn solve(&self, b: &mut [Complex64]) {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                b.swap(k, p);
            }
            let bk = b[k];
            for r in k + 1..=(k + kl).min(n - 1) {
                b[r] -= self.band[self.idx(r, k)] * bk;
            }
        }
        for i in (0..n).rev() {
            let base = self.idx(i, i);
            let mut acc = b[i];
            let last = (i + kl + ku).min(n - 1);
            for j in i + 1..=last {
                acc -= self.band[base + j - i] * b[j];
            }
            b[i] = acc / self.band[base];
        }
    }

    /// Solves `(A - σ)^H x = b` in place.
    pub fn solve_adjoint(&self, b: &mut [Complex64]) {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        for i in 0..n {
            let base = self.idx(i, i);
            let y = b[i] / self.band[base].conj();
            b[i] = y;
            let last = (i + kl + ku).min(n - 1);
            for j in i + 1..=last {
                b[j] -= self.band[base + j - i].conj() * y;
            }
        }
        for k in (0..n).rev() {
            let mut acc = b[k];
            for r in k + 1..=(k + kl).min(n - 1) {
                acc -= self.band[self.idx(r, k)].conj() * b[r];
            }
            b[k] = acc;
            let p = self.pivots[k];
            if p != k {
                b.swap(k, p);
            }
        }
    }

    /// Bytes held by the factor.
    pub fn storage_bytes(&self) -> usize {
        self.band.len() * std::mem::size_of::<Complex64>()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_band(n: usize, kl: usize, ku: usize, seed: u64) -> CsrMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut t = Vec::new();
        for i in 0..n {
            for j in i.saturating_sub(kl)..=(i + ku).min(n - 1) {
                // weak diagonal so that pivoting is exercised
                let v = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                t.push((i, j, if i == j { v * 0.01 } else { v }));
            }
        }
        CsrMatrix::from_triplets(n, t)
    }

    #[test]
    fn solves_random_banded_systems() {
        let a = random_band(60, 3, 2, 7);
        let shift = Complex64::new(0.2, -0.1);
        let lu = BandLu::factor(&a, shift).unwrap();
        let x: Vec<Complex64> = (0..60).map(|k| Complex64::new(k as f64, 1.0 - k as f64 * 0.5)).collect();
        let mut b = a.apply(&x);
        for k in 0..60 {
            b[k] -= shift * x[k];
        }
        let mut y = b.clone();
        lu.solve(&mut y);
        let err = x.iter().zip(&y).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max);
        assert!(err < 1e-9, "{err}");
    }

    #[test]
    fn adjoint_solve() {
        let a = random_band(40, 2, 3, 11);
        let lu = BandLu::factor(&a, Complex64::new(0.0, 0.0)).unwrap();
        let x: Vec<Complex64> = (0..40).map(|k| Complex64::new((k as f64).sin(), (k as f64).cos())).collect();
        // b = A^H x
        let mut b = vec![Complex64::new(0.0, 0.0); 40];
        for (i, j, v) in a.triplets() {
            b[j] += v.conj() * x[i];
        }
        lu.solve_adjoint(&mut b);
        let err = x.iter().zip(&b).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max);
        assert!(err < 1e-9, "{err}");
    }

    #[test]
    fn singular_matrix_is_reported() {
        let a = CsrMatrix::from_triplets(3, vec![(0, 0, Complex64::new(1.0, 0.0)), (2, 2, Complex64::new(1.0, 0.0))]);
        assert!(matches!(BandLu::factor(&a, Complex64::new(0.0, 0.0)), Err(Error::SingularPivot { column: 1 })));
    }
}
