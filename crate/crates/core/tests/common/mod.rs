//! Shared independent oracles for the integration and acceptance tests.
//! Everything here recomputes results through routes the library does not
//! use internally.
#![allow(dead_code)] // each integration target uses a subset

use magnus_core::discretization::{DiscreteHamiltonian, PotentialSpec, SpatialGrid};
use magnus_core::linalg::eigen::expm_antihermitian;
use magnus_core::linalg::matrix::{matmul, ComplexMatrix};
use magnus_core::num_complex::Complex64;
use magnus_core::propagators::InteractionHamiltonianEvaluator;

pub fn grid_1d(n: usize, a: f64, b: f64) -> SpatialGrid {
    SpatialGrid::new(1, n, a, b).expect("valid grid")
}

pub fn dense_evaluator(n: usize, a: f64, b: f64, v: PotentialSpec) -> InteractionHamiltonianEvaluator {
    let h = DiscreteHamiltonian::new(grid_1d(n, a, b), v).expect("hamiltonian");
    InteractionHamiltonianEvaluator::dense(h).expect("dense evaluator")
}

/// Fine-step midpoint-exponential integrator of `i u' = H_I(t) u`: the
/// reference-propagator oracle. Each substep exponentiates the midpoint
/// Hamiltonian exactly.
pub fn fine_integrator(
    ev: &InteractionHamiltonianEvaluator,
    t1: f64,
    t0: f64,
    substeps: usize,
) -> ComplexMatrix {
    let n = ev.total_dim();
    let dt = (t1 - t0) / substeps as f64;
    let mut u = ComplexMatrix::identity(n);
    for j in 0..substeps {
        let tm = t0 + (j as f64 + 0.5) * dt;
        let hm = ev.hamiltonian(tm).expect("dense");
        let g = hm.scale(Complex64::new(0.0, -dt));
        let step = expm_antihermitian(&g).expect("unitary step");
        u = matmul(step.matrix(), &u);
    }
    u
}
