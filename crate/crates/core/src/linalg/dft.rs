//! Unitary discrete Fourier transforms (radix-agnostic, any length).
//!
//! Both directions carry the 1/sqrt(N) normalization, so forward and inverse
//! are exact adjoints of each other. The d-dimensional transform applies the
//! 1-D transform along each axis of a flat vector indexed with axis 0
//! fastest.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::linalg::matrix::ComplexMatrix;

/// Unitary DFT of a vector. `inverse` applies the adjoint transform;
/// `dft_apply(dft_apply(v, false), true)` returns `v` up to roundoff.
pub fn dft_apply(v: &[Complex64], inverse: bool) -> Vec<Complex64> {
    let plans = DftPlans::new(v.len(), 1);
    let mut out = v.to_vec();
    plans.transform(&mut out, inverse);
    out
}

/// Cached FFT plans for a periodic grid with `n_per_axis` points along each
/// of `d` axes. Plans are write-once at construction; transforms take `&self`
/// and are safe to run concurrently.
pub struct DftPlans {
    n_per_axis: usize,
    d: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl DftPlans {
    pub fn new(n_per_axis: usize, d: usize) -> Self {
        assert!(n_per_axis >= 1 && d >= 1);
        let mut planner = FftPlanner::new();
        Self {
            n_per_axis,
            d,
            forward: planner.plan_fft_forward(n_per_axis),
            inverse: planner.plan_fft_inverse(n_per_axis),
        }
    }

    pub fn total_dim(&self) -> usize {
        self.n_per_axis.pow(self.d as u32)
    }

    /// In-place unitary transform of a flat d-dimensional vector.
    pub fn transform(&self, v: &mut [Complex64], inverse: bool) {
        let n = self.n_per_axis;
        let total = self.total_dim();
        assert_eq!(v.len(), total, "vector length does not match grid");
        let plan = if inverse { &self.inverse } else { &self.forward };
        let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
        let scale = 1.0 / (n as f64).sqrt();

        for axis in 0..self.d {
            let stride = n.pow(axis as u32);
            if stride == 1 {
                for chunk in v.chunks_mut(n) {
                    plan.process_with_scratch(chunk, &mut scratch);
                }
            } else {
                let mut line = vec![Complex64::new(0.0, 0.0); n];
                let block = stride * n;
                for base_block in (0..total).step_by(block) {
                    for offset in 0..stride {
                        let base = base_block + offset;
                        for (i, slot) in line.iter_mut().enumerate() {
                            *slot = v[base + i * stride];
                        }
                        plan.process_with_scratch(&mut line, &mut scratch);
                        for (i, slot) in line.iter().enumerate() {
                            v[base + i * stride] = *slot;
                        }
                    }
                }
            }
            for z in v.iter_mut() {
                *z *= scale;
            }
        }
    }

    /// `F m F†`: conjugates a matrix into the Fourier basis.
    pub fn to_fourier_matrix(&self, m: &ComplexMatrix) -> ComplexMatrix {
        let mut out = m.clone();
        self.transform_columns(&mut out, false);
        self.transform_rows(&mut out, true);
        out
    }

    /// `F† m F`: conjugates a matrix back to the position basis.
    pub fn to_position_matrix(&self, m: &ComplexMatrix) -> ComplexMatrix {
        let mut out = m.clone();
        self.transform_columns(&mut out, true);
        self.transform_rows(&mut out, false);
        out
    }

    fn transform_rows(&self, m: &mut ComplexMatrix, inverse: bool) {
        let rows = m.rows();
        for i in 0..rows {
            self.transform(m.row_mut(i), inverse);
        }
    }

    fn transform_columns(&self, m: &mut ComplexMatrix, inverse: bool) {
        let (rows, cols) = (m.rows(), m.cols());
        let mut col = vec![Complex64::new(0.0, 0.0); rows];
        for j in 0..cols {
            for (i, slot) in col.iter_mut().enumerate() {
                *slot = m.get(i, j);
            }
            self.transform(&mut col, inverse);
            for (i, slot) in col.iter().enumerate() {
                m.set(i, j, *slot);
            }
        }
    }
}
