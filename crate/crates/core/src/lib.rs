//! Numerical core for second-order Magnus propagation of periodic
//! finite-difference Schrödinger operators in the interaction picture.
//!
//! The library builds the discrete kinetic and potential operators, applies
//! the free propagator through FFT diagonalization, assembles the two-term
//! Magnus exponent over a step by exact integrals or Riemann-sum quadrature,
//! and measures the nested-commutator quantities that control the stepper's
//! local and long-time error. A study harness sweeps grids of
//! (N, dt, M, T, potential) cells and emits deterministic CSV/JSON reports.

pub mod diagnostics;
pub mod discretization;
pub mod error;
pub mod linalg;
pub mod magnus;
pub mod propagators;
pub mod report;
pub mod study;

pub use error::{
    ComplexityError, FitError, GridError, LinalgError, MagnusError, ScanError, StudyError,
};

pub use num_complex;
