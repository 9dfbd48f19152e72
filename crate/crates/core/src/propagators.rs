//! Propagators for the split Hamiltonian `A + B`: the free propagator
//! `exp(-iAt)` through FFT diagonalization, the interaction-picture
//! Hamiltonian `H_I(t) = exp(iAt) B exp(-iAt)` and its time derivative, and
//! the exact reference propagator of the interaction-picture dynamics.
//!
//! In the DFT eigenbasis of A the interaction Hamiltonian is an entrywise
//! phase modulation of one fixed matrix,
//! `FH_I(t)F†[i][j] = exp(i(lam_i - lam_j)t) (FBF†)[i][j]`,
//! so dense evaluations cost O(n²). Public results are reported in the
//! position basis; `*_fourier` variants expose the eigenbasis forms that the
//! stepper and the study harness use directly (operator norms agree in both
//! bases).

use num_complex::Complex64;

use crate::discretization::{DiscreteHamiltonian, DENSE_CAP};
use crate::error::{GridError, LinalgError};
use crate::linalg::dft::DftPlans;
use crate::linalg::eigen::hermitian_eig;
use crate::linalg::matrix::ComplexMatrix;
use crate::linalg::unitary::UnitaryMatrix;

pub use crate::linalg::unitary::UNITARITY_TOLERANCE;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvaluatorMode {
    Dense,
    MatrixFree,
}

/// Evaluator of the interaction-picture Hamiltonian at arbitrary times.
///
/// Immutable after construction; all cached objects (FFT plans, the
/// Fourier-basis potential block) are built once. Concurrent evaluation at
/// distinct times is safe and bit-deterministic.
pub struct InteractionHamiltonianEvaluator {
    ham: DiscreteHamiltonian,
    mode: EvaluatorMode,
    plans: DftPlans,
    /// `F B F†`, exactly Hermitian by construction; dense mode only.
    b_hat: Option<ComplexMatrix>,
}

impl InteractionHamiltonianEvaluator {
    pub fn new(ham: DiscreteHamiltonian, mode: EvaluatorMode) -> Result<Self, GridError> {
        let total = ham.grid().total_dim();
        if matches!(mode, EvaluatorMode::Dense) && total > DENSE_CAP {
            return Err(GridError::DenseCapExceeded {
                cap: DENSE_CAP,
                requested: total,
            });
        }
        let plans = ham.grid().dft_plans();
        let b_hat = match mode {
            EvaluatorMode::Dense => {
                let raw = plans.to_fourier_matrix(&ham.b_dense());
                // Symmetrize away FFT roundoff; B is real diagonal, so the
                // conjugated block is Hermitian exactly.
                let sym = ComplexMatrix::from_fn(total, total, |i, j| {
                    (raw.get(i, j) + raw.get(j, i).conj()) * 0.5
                });
                Some(sym)
            }
            EvaluatorMode::MatrixFree => None,
        };
        Ok(Self {
            ham,
            mode,
            plans,
            b_hat,
        })
    }

    pub fn dense(ham: DiscreteHamiltonian) -> Result<Self, GridError> {
        Self::new(ham, EvaluatorMode::Dense)
    }

    pub fn mode(&self) -> EvaluatorMode {
        self.mode
    }

    pub fn hamiltonian_ref(&self) -> &DiscreteHamiltonian {
        &self.ham
    }

    pub fn total_dim(&self) -> usize {
        self.ham.grid().total_dim()
    }

    pub fn plans(&self) -> &DftPlans {
        &self.plans
    }

    /// `F B F†` (dense mode).
    pub fn b_hat(&self) -> Result<&ComplexMatrix, GridError> {
        self.require_dense()
    }

    /// Phase vector `exp(i lam_k t)`.
    pub fn phase_vector(&self, t: f64) -> Vec<Complex64> {
        self.ham
            .kinetic_spectrum()
            .iter()
            .map(|&lam| Complex64::from_polar(1.0, lam * t))
            .collect()
    }

    /// `F H_I(t) F†`: entrywise phase modulation of the potential block.
    pub fn hamiltonian_fourier(&self, t: f64) -> Result<ComplexMatrix, GridError> {
        let b_hat = self.require_dense()?;
        let ph = self.phase_vector(t);
        let n = ph.len();
        let mut out = ComplexMatrix::zeros(n, n);
        for i in 0..n {
            let row_b = b_hat.row(i);
            let row_o = out.row_mut(i);
            let pi = ph[i];
            for j in 0..n {
                row_o[j] = pi * ph[j].conj() * row_b[j];
            }
        }
        Ok(out)
    }

    /// Dense `H_I(t)` in the position basis.
    pub fn hamiltonian(&self, t: f64) -> Result<ComplexMatrix, GridError> {
        Ok(self.plans.to_position_matrix(&self.hamiltonian_fourier(t)?))
    }

    /// `F (d/dt H_I)(t) F†`: entrywise `i(lam_i - lam_j)` weight on top of
    /// the phase modulation.
    pub fn derivative_fourier(&self, t: f64) -> Result<ComplexMatrix, GridError> {
        let b_hat = self.require_dense()?;
        let lam = self.ham.kinetic_spectrum();
        let ph = self.phase_vector(t);
        let n = lam.len();
        let mut out = ComplexMatrix::zeros(n, n);
        for i in 0..n {
            let row_b = b_hat.row(i);
            let row_o = out.row_mut(i);
            for j in 0..n {
                let omega = lam[i] - lam[j];
                row_o[j] = Complex64::new(0.0, omega) * ph[i] * ph[j].conj() * row_b[j];
            }
        }
        Ok(out)
    }

    /// Dense `d/dt H_I(t) = i exp(iAt) [A, B] exp(-iAt)` in the position basis.
    pub fn derivative(&self, t: f64) -> Result<ComplexMatrix, GridError> {
        Ok(self.plans.to_position_matrix(&self.derivative_fourier(t)?))
    }

    /// Matrix-free application `H_I(t) v` through four FFT passes and one
    /// diagonal scale; available in every mode.
    pub fn apply(&self, t: f64, v: &[Complex64]) -> Vec<Complex64> {
        let lam = self.ham.kinetic_spectrum();
        let mut w = v.to_vec();
        self.plans.transform(&mut w, false);
        for (z, &l) in w.iter_mut().zip(lam) {
            *z *= Complex64::from_polar(1.0, -l * t);
        }
        self.plans.transform(&mut w, true);
        for (z, &b) in w.iter_mut().zip(self.ham.b_diag()) {
            *z *= b;
        }
        self.plans.transform(&mut w, false);
        for (z, &l) in w.iter_mut().zip(lam) {
            *z *= Complex64::from_polar(1.0, l * t);
        }
        self.plans.transform(&mut w, true);
        w
    }

    fn require_dense(&self) -> Result<&ComplexMatrix, GridError> {
        self.b_hat.as_ref().ok_or(GridError::DenseCapExceeded {
            cap: DENSE_CAP,
            requested: self.total_dim(),
        })
    }
}

/// Free propagator `exp(-iAt) = F† diag(exp(-i lam_k t)) F`, materialized
/// without any dense eigensolve.
pub fn free_propagator(h: &DiscreteHamiltonian, t: f64) -> Result<UnitaryMatrix, LinalgError> {
    let lam = h.kinetic_spectrum();
    let n = lam.len();
    let diag = ComplexMatrix::from_fn(n, n, |i, j| {
        if i == j {
            Complex64::from_polar(1.0, -lam[i] * t)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let plans = h.grid().dft_plans();
    UnitaryMatrix::new(plans.to_position_matrix(&diag))
}

/// Exact interaction-picture propagator built from one eigendecomposition of
/// `A + B` in the Fourier basis:
/// `U_I(t1, t0) = exp(iA t1) exp(-i(A+B)(t1 - t0)) exp(-iA t0)`.
///
/// This is the time-ordered evolution of `H_I` with no stepping error; the
/// decomposition is cached so every requested interval reuses it.
pub struct ExactPropagator {
    spectrum: Vec<f64>,
    plans: DftPlans,
    /// Eigenvalues/eigenvectors of `diag(lam) + F B F†`.
    full_eigenvalues: Vec<f64>,
    full_eigenvectors: ComplexMatrix,
}

impl ExactPropagator {
    pub fn new(h: &DiscreteHamiltonian) -> Result<Self, LinalgError> {
        let total = h.grid().total_dim();
        if total > DENSE_CAP {
            return Err(LinalgError::DimensionMismatch {
                expected: DENSE_CAP,
                found: total,
            });
        }
        let plans = h.grid().dft_plans();
        let b_hat = plans.to_fourier_matrix(&h.b_dense());
        let lam = h.kinetic_spectrum();
        let full = ComplexMatrix::from_fn(total, total, |i, j| {
            let sym = (b_hat.get(i, j) + b_hat.get(j, i).conj()) * 0.5;
            if i == j {
                sym + Complex64::new(lam[i], 0.0)
            } else {
                sym
            }
        });
        let eig = hermitian_eig(&full)?;
        Ok(Self {
            spectrum: lam.to_vec(),
            plans,
            full_eigenvalues: eig.eigenvalues,
            full_eigenvectors: eig.eigenvectors,
        })
    }

    /// `F U_I(t1, t0) F†`.
    pub fn between_fourier(&self, t1: f64, t0: f64) -> ComplexMatrix {
        let tau = t1 - t0;
        let n = self.spectrum.len();
        let q = &self.full_eigenvectors;
        // Q exp(-i mu tau) Q†
        let mut scaled = q.clone();
        for i in 0..n {
            let row = scaled.row_mut(i);
            for (j, &mu) in self.full_eigenvalues.iter().enumerate() {
                row[j] *= Complex64::from_polar(1.0, -mu * tau);
            }
        }
        let mut core = scaled.mul(&q.adjoint()).expect("square");
        // Left phase exp(i lam t1), right phase exp(-i lam t0).
        for i in 0..n {
            let li = Complex64::from_polar(1.0, self.spectrum[i] * t1);
            let row = core.row_mut(i);
            for (j, z) in row.iter_mut().enumerate() {
                *z = li * *z * Complex64::from_polar(1.0, -self.spectrum[j] * t0);
            }
        }
        core
    }

    pub fn between(&self, t1: f64, t0: f64) -> Result<UnitaryMatrix, LinalgError> {
        UnitaryMatrix::new(self.plans.to_position_matrix(&self.between_fourier(t1, t0)))
    }
}

/// One-shot exact propagator; callers with several intervals should build
/// [`ExactPropagator`] once instead.
pub fn exact_propagator(
    h: &DiscreteHamiltonian,
    t1: f64,
    t0: f64,
) -> Result<UnitaryMatrix, LinalgError> {
    ExactPropagator::new(h)?.between(t1, t0)
}
