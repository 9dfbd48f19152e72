//! Dense complex matrices in row-major layout.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::LinalgError;

/// Dense complex matrix, row-major.
///
/// All public constructors and operations keep entries finite; operations on
/// mismatched shapes return [`LinalgError::DimensionMismatch`].
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

/// Row count below which matmul stays single-threaded (thread spawn overhead
/// dominates for tiny operands).
const PAR_MATMUL_MIN_ROWS: usize = 48;

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows >= 1 && cols >= 1, "matrix dimensions must be >= 1");
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.data[i * cols + j] = f(i, j);
            }
        }
        m
    }

    /// Diagonal matrix from real entries.
    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &v) in diag.iter().enumerate() {
            m.data[i * diag.len() + i] = Complex64::new(v, 0.0);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [Complex64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.get(i, j).conj();
            }
        }
        out
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self, LinalgError> {
        self.check_same_shape(other)?;
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self, LinalgError> {
        self.check_same_shape(other)?;
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    pub fn add_assign(&mut self, other: &Self) {
        assert_eq!(self.rows, other.rows);
        assert_eq!(self.cols, other.cols);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    /// Largest entry magnitude (max norm).
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Frobenius norm.
    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Max-entry defect from Hermitian symmetry, `max |m[i][j] - conj(m[j][i])|`.
    pub fn hermitian_defect(&self) -> f64 {
        let mut d: f64 = 0.0;
        for i in 0..self.rows {
            for j in i..self.cols {
                d = d.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        d
    }

    /// Max-entry defect from anti-Hermitian symmetry, `max |m[i][j] + conj(m[j][i])|`.
    pub fn antihermitian_defect(&self) -> f64 {
        let mut d: f64 = 0.0;
        for i in 0..self.rows {
            for j in i..self.cols {
                d = d.max((self.get(i, j) + self.get(j, i).conj()).norm());
            }
        }
        d
    }

    /// Matrix-vector product.
    pub fn matvec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.cols, "matvec length mismatch");
        let mut out = vec![Complex64::new(0.0, 0.0); self.rows];
        for i in 0..self.rows {
            let row = self.row(i);
            let mut acc = Complex64::new(0.0, 0.0);
            for (a, b) in row.iter().zip(v) {
                acc += a * b;
            }
            out[i] = acc;
        }
        out
    }

    /// Adjoint-matrix-vector product `m† v` without forming the adjoint.
    pub fn adjoint_matvec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.rows, "adjoint_matvec length mismatch");
        let mut out = vec![Complex64::new(0.0, 0.0); self.cols];
        for i in 0..self.rows {
            let row = self.row(i);
            let vi = v[i];
            for (o, a) in out.iter_mut().zip(row) {
                *o += a.conj() * vi;
            }
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Result<Self, LinalgError> {
        if self.cols != other.rows {
            return Err(LinalgError::DimensionMismatch {
                expected: self.cols,
                found: other.rows,
            });
        }
        Ok(matmul(self, other))
    }

    fn check_same_shape(&self, other: &Self) -> Result<(), LinalgError> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(LinalgError::DimensionMismatch {
                expected: self.rows * self.cols,
                found: other.rows * other.cols,
            });
        }
        Ok(())
    }
}

/// Split-plane (separate re/im) matmul. The planar form exposes plain f64
/// FMA chains to the vectorizer, which interleaved complex data does not.
pub fn matmul(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    assert_eq!(a.cols, b.rows, "matmul dimension mismatch");
    let (m, k, n) = (a.rows, a.cols, b.cols);

    let mut b_re = vec![0.0f64; k * n];
    let mut b_im = vec![0.0f64; k * n];
    for (i, z) in b.data.iter().enumerate() {
        b_re[i] = z.re;
        b_im[i] = z.im;
    }

    let mut out = ComplexMatrix::zeros(m, n);

    let row_kernel = |i: usize, out_row: &mut [Complex64]| {
        let mut acc_re = vec![0.0f64; n];
        let mut acc_im = vec![0.0f64; n];
        let a_row = &a.data[i * k..(i + 1) * k];
        for (kk, av) in a_row.iter().enumerate() {
            let (ar, ai) = (av.re, av.im);
            if ar == 0.0 && ai == 0.0 {
                continue;
            }
            let br = &b_re[kk * n..(kk + 1) * n];
            let bi = &b_im[kk * n..(kk + 1) * n];
            for j in 0..n {
                acc_re[j] += ar * br[j] - ai * bi[j];
                acc_im[j] += ar * bi[j] + ai * br[j];
            }
        }
        for j in 0..n {
            out_row[j] = Complex64::new(acc_re[j], acc_im[j]);
        }
    };

    if m >= PAR_MATMUL_MIN_ROWS {
        out.data
            .par_chunks_mut(n)
            .enumerate()
            .for_each(|(i, row)| row_kernel(i, row));
    } else {
        for (i, row) in out.data.chunks_mut(n).enumerate() {
            row_kernel(i, row);
        }
    }
    out
}

/// Commutator `[x, y] = xy - yx`.
pub fn commutator(x: &ComplexMatrix, y: &ComplexMatrix) -> Result<ComplexMatrix, LinalgError> {
    check_square_same(&[x, y])?;
    let xy = x.mul(y)?;
    let yx = y.mul(x)?;
    xy.sub(&yx)
}

/// Nested commutator `[[x, y], z]`.
pub fn nested_commutator(
    x: &ComplexMatrix,
    y: &ComplexMatrix,
    z: &ComplexMatrix,
) -> Result<ComplexMatrix, LinalgError> {
    check_square_same(&[x, y, z])?;
    let inner = commutator(x, y)?;
    commutator(&inner, z)
}

fn check_square_same(ms: &[&ComplexMatrix]) -> Result<(), LinalgError> {
    let n = ms[0].rows;
    for m in ms {
        if !m.is_square() || m.rows != n {
            return Err(LinalgError::DimensionMismatch {
                expected: n,
                found: m.rows.max(m.cols),
            });
        }
    }
    Ok(())
}
