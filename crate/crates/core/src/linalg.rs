//! Dense Hermitian matrices: matvec and Cholesky.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Dense square complex matrix stored row-major, expected Hermitian.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    n: usize,
    data: Vec<Complex64>,
}

impl HermitianMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![Complex64::new(0.0, 0.0); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_row_major(n: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                actual: data.len(),
            });
        }
        Ok(Self { n, data })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.data[i * self.n + j] = v;
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    /// Largest `|A_ij - conj(A_ji)|`.
    pub fn hermitian_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for j in i..self.n {
                worst = worst.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        worst
    }

    /// `A x`. Rows are reduced independently in a fixed order, so the result
    /// does not depend on the thread count.
    pub fn matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.n, "matvec dimension mismatch");
        self.data
            .par_chunks(self.n.max(1))
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Quadratic form `x^H A x` (real part; exact Hermitian input is assumed).
    pub fn quadratic_form(&self, x: &[Complex64]) -> f64 {
        let ax = self.matvec(x);
        x.iter().zip(&ax).map(|(a, b)| (a.conj() * b).re).sum()
    }

    /// Largest entrywise deviation from the identity.
    pub fn identity_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((self.get(i, j) - target).norm());
            }
        }
        worst
    }
}

/// `Σ x_i conj(y_i)` with independent partial sums.
fn dot_conj(x: &[Complex64], y: &[Complex64]) -> Complex64 {
    let mut re = [0.0f64; 4];
    let mut im = [0.0f64; 4];
    let (xc, yc) = (x.chunks_exact(4), y.chunks_exact(4));
    let (xr, yr) = (xc.remainder(), yc.remainder());
    for (a, b) in xc.zip(yc) {
        for t in 0..4 {
            re[t] += a[t].re * b[t].re + a[t].im * b[t].im;
            im[t] += a[t].im * b[t].re - a[t].re * b[t].im;
        }
    }
    let mut acc = Complex64::new(re.iter().sum(), im.iter().sum());
    for (a, b) in xr.iter().zip(yr) {
        acc += a * b.conj();
    }
    acc
}

/// Lower-triangular factor `A = L L^H` of a Hermitian positive definite matrix.
#[derive(Debug, Clone)]
pub struct Cholesky {
    n: usize,
    lower: Vec<Complex64>,
}

impl Cholesky {
    /// Factor `a + shift·I`. Fails on the first pivot that is not strictly
    /// positive.
    ///
    /// Rows are produced in blocks so that each finished row is streamed
    /// once per block rather than once per column.
    pub fn factor_shifted(a: &HermitianMatrix, shift: f64) -> Result<Self> {
        const BLOCK: usize = 64;
        let n = a.dim();
        let mut l = a.as_slice().to_vec();
        for i0 in (0..n).step_by(BLOCK) {
            let i1 = (i0 + BLOCK).min(n);
            let (done, block) = l.split_at_mut(i0 * n);
            let block = &mut block[..(i1 - i0) * n];
            for k in 0..i1 {
                if k >= i0 {
                    let row = &mut block[(k - i0) * n..(k - i0 + 1) * n];
                    let d = row[k].re + shift - row[..k].iter().map(|z| z.norm_sqr()).sum::<f64>();
                    if !(d > 0.0) || !d.is_finite() {
                        return Err(Error::NotPositiveDefinite { row: k, pivot: d });
                    }
                    row[k] = Complex64::new(d.sqrt(), 0.0);
                }
                let (pivot_row, rest) = if k >= i0 {
                    let (head, tail) = block.split_at_mut((k - i0 + 1) * n);
                    (&head[(k - i0) * n..], tail)
                } else {
                    (&done[k * n..(k + 1) * n], &mut block[..])
                };
                let lkk = pivot_row[k].re;
                let lk = &pivot_row[..k];
                for row in rest.chunks_exact_mut(n) {
                    let s = row[k] - dot_conj(&row[..k], lk);
                    row[k] = s / lkk;
                }
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                l[i * n + j] = Complex64::new(0.0, 0.0);
            }
        }
        Ok(Self { n, lower: l })
    }

    pub fn factor(a: &HermitianMatrix) -> Result<Self> {
        Self::factor_shifted(a, 0.0)
    }

    /// Diagonal of the factor (all positive).
    pub fn pivots(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.lower[i * self.n + i].re).collect()
    }

    /// Solve `A x = b`.
    pub fn solve(&self, b: &[Complex64]) -> Vec<Complex64> {
        let n = self.n;
        assert_eq!(b.len(), n);
        let mut y = b.to_vec();
        for i in 0..n {
            let row = &self.lower[i * n..i * n + i];
            let mut s = y[i];
            for (lk, yk) in row.iter().zip(&y[..i]) {
                s -= lk * yk;
            }
            y[i] = s / self.lower[i * n + i].re;
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for (k, yk) in y.iter().enumerate().skip(i + 1) {
                s -= self.lower[k * n + i].conj() * yk;
            }
            y[i] = s / self.lower[i * n + i].re;
        }
        y
    }
}
