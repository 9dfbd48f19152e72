//! Cross-module properties: per-step bound at a single cell, the
//! quadrature-point balance, and the exponential against an independent
//! scaling-and-squaring oracle.

mod common;

use common::dense_evaluator;
use magnus_core::diagnostics::{scan_alpha, scan_beta, ScanOptions};
use magnus_core::discretization::{DiscreteHamiltonian, PotentialSpec, SpatialGrid};
use magnus_core::linalg::eigen::expm_antihermitian;
use magnus_core::linalg::matrix::{matmul, ComplexMatrix};
use magnus_core::linalg::norms::{spectral_norm_auto, POWER_ITERATION_SEED};
use magnus_core::magnus::{magnus_step, recommended_quadrature_points, MagnusStepConfig};
use magnus_core::num_complex::Complex64;
use magnus_core::propagators::ExactPropagator;
use magnus_core::study::{fit_order, run_study, MPolicy, StudyGrid, StudyKind, StudyOptions};

const TAU: f64 = std::f64::consts::TAU;

fn op_norm(m: &ComplexMatrix) -> f64 {
    spectral_norm_auto(m, POWER_ITERATION_SEED).unwrap().value
}

#[test]
fn per_step_bound_holds_at_single_cell() {
    let ev = dense_evaluator(8, 0.0, 1.0, PotentialSpec::cos_mode_1d(1, 1.0));
    let dt = 0.05;
    let cfg = MagnusStepConfig::reference(dt, 4096).unwrap();
    let u2 = magnus_step(&ev, 0.0, &cfg).unwrap();
    let exact = ExactPropagator::new(ev.hamiltonian_ref()).unwrap();
    let u_exact = exact.between(dt, 0.0).unwrap();
    let error = op_norm(&u2.matrix().sub(u_exact.matrix()).unwrap());

    let opts = ScanOptions {
        samples_per_axis: 9,
        refine: true,
        norm_seed: POWER_ITERATION_SEED,
    };
    let alpha = scan_alpha(&ev, 0.0, dt, &opts).unwrap();
    let beta = scan_beta(&ev, 0.0, dt, &opts).unwrap();
    let bound = (13.0 / 24.0) * dt.powi(3) * alpha.sup + (5.0 / 48.0) * dt.powi(4) * beta.sup;
    assert!(
        error <= bound + 1e-12,
        "per-step error {error:.6e} above bound {bound:.6e}"
    );
}

#[test]
fn recommended_points_balance_the_long_time_bound() {
    // The point-count estimate uses the unnormalized commutator weight
    // (13 + 10 dt alpha); evaluated at the returned M, the Riemann-sum term
    // of the long-time bound therefore lands at 24x the commutator terms
    // (ceil effects only shrink it).
    let ev = dense_evaluator(64, 0.0, TAU, PotentialSpec::cos_mode_1d(1, 1.0));
    let t_total = 1.0;
    let dt = 0.1;
    let steps = 10.0;

    let opts = ScanOptions {
        samples_per_axis: 9,
        refine: false,
        norm_seed: POWER_ITERATION_SEED,
    };
    let alpha_scan = scan_alpha(&ev, 0.0, dt, &opts).unwrap();
    let alpha_comm_sum = steps * alpha_scan.sup;
    let h_norm = ev.hamiltonian_ref().b_norm();
    let dh_norm = op_norm(&ev.derivative_fourier(0.0).unwrap());

    let rec = recommended_quadrature_points(t_total, dt, h_norm, alpha_comm_sum, dh_norm).unwrap();
    assert!(rec.points >= 1);

    let quad_term = t_total * dt / rec.points as f64 * (1.0 + 3.0 * dt * h_norm) * dh_norm;
    let comm_terms = dt.powi(3) * alpha_comm_sum * (13.0 / 24.0 + (5.0 / 12.0) * dt * h_norm);
    let ratio = quad_term / comm_terms;
    assert!(
        (0.5..=24.5).contains(&ratio),
        "balance ratio {ratio:.3} (quad {quad_term:.3e} vs comm {comm_terms:.3e}, M = {})",
        rec.points
    );
}

#[test]
fn theorem1_sweep_shows_superconvergent_slopes() {
    // Local error of a single step: fifth order in dt (third order from the
    // exponent truncation, two more from the quadratic commutator window);
    // the bound column scales the same way through the measured suprema.
    let grid = StudyGrid {
        kind: StudyKind::Theorem1Check,
        potential: PotentialSpec::cos_mode_1d(1, 1.0),
        d: 1,
        interval: (0.0, TAU),
        n_list: vec![64],
        dt_list: vec![0.125, 0.0625, 0.03125],
        m_policy: MPolicy::Exact,
        t_total: 1.0,
        m_list: Vec::new(),
    };
    let opts = StudyOptions {
        scan_k: 9,
        refine_scans: false,
        ..StudyOptions::default()
    };
    let report = run_study(&grid, &opts).unwrap();
    assert!(report.violations.is_empty());

    let err_points: Vec<(f64, f64)> = report.rows.iter().map(|r| (r.dt, r.error)).collect();
    let bound_points: Vec<(f64, f64)> = report
        .rows
        .iter()
        .map(|r| (r.dt, r.bound_rhs.unwrap()))
        .collect();
    let lhs = fit_order(&err_points).unwrap().slope;
    let rhs = fit_order(&bound_points).unwrap().slope;
    assert!(lhs >= 4.0, "single-step error slope {lhs:.3} below 4");
    assert!(
        (4.2..=5.6).contains(&rhs),
        "bound slope {rhs:.3} outside the dt^5 window"
    );
}

/// Scaling-and-squaring Taylor exponential; independent of the
/// eigendecomposition route.
fn expm_oracle(g: &ComplexMatrix) -> ComplexMatrix {
    let n = g.rows();
    let norm = g.max_abs() * n as f64;
    let squarings = if norm > 0.25 {
        (norm / 0.25).log2().ceil() as u32
    } else {
        0
    };
    let scaled = g.scale(Complex64::new(1.0 / f64::powi(2.0, squarings as i32), 0.0));
    let mut term = ComplexMatrix::identity(n);
    let mut sum = ComplexMatrix::identity(n);
    for k in 1..=24 {
        term = matmul(&term, &scaled).scale(Complex64::new(1.0 / k as f64, 0.0));
        sum = sum.add(&term).unwrap();
    }
    for _ in 0..squarings {
        sum = matmul(&sum, &sum);
    }
    sum
}

#[test]
fn full_hamiltonian_exponential_matches_oracle() {
    let g = SpatialGrid::new(1, 8, 0.0, 1.0).unwrap();
    let h = DiscreteHamiltonian::new(g, PotentialSpec::cos_mode_1d(1, 1.0)).unwrap();
    let full = h
        .a_dense()
        .unwrap()
        .add(&h.b_dense())
        .unwrap()
        .scale(Complex64::new(0.0, -0.1));
    let u = expm_antihermitian(&full).unwrap();
    let oracle = expm_oracle(&full);
    let gap = u.matrix().sub(&oracle).unwrap().max_abs();
    assert!(gap <= 1e-11, "exponential differs from oracle by {gap:.3e}");
}

#[test]
fn long_time_bound_with_quadrature_term_holds() {
    // Full long-time inequality for the left-Riemann algorithm: commutator
    // terms plus the Riemann-sum term, all from measured quantities.
    let ev = dense_evaluator(16, 0.0, TAU, PotentialSpec::cos_mode_1d(1, 1.0));
    let t_total = 0.5;
    let steps = 4usize;
    let dt = t_total / steps as f64;
    let m = 64usize;
    let cfg = MagnusStepConfig::left_riemann(dt, m).unwrap();
    let u = magnus_core::magnus::evolve(&ev, t_total, steps, &cfg).unwrap();
    let exact = ExactPropagator::new(ev.hamiltonian_ref()).unwrap();
    let error = op_norm(
        &u.matrix()
            .sub(exact.between(t_total, 0.0).unwrap().matrix())
            .unwrap(),
    );

    let opts = ScanOptions {
        samples_per_axis: 9,
        refine: true,
        norm_seed: POWER_ITERATION_SEED,
    };
    let alpha = scan_alpha(&ev, 0.0, dt, &opts).unwrap();
    let beta = scan_beta(&ev, 0.0, dt, &opts).unwrap();
    let h_norm = ev.hamiltonian_ref().b_norm();
    let dh_norm = op_norm(&ev.derivative_fourier(0.0).unwrap());
    let bound = steps as f64
        * ((13.0 / 24.0) * dt.powi(3) * alpha.sup + (5.0 / 48.0) * dt.powi(4) * beta.sup)
        + t_total * dt / m as f64 * (1.0 + 3.0 * dt * h_norm) * dh_norm;
    assert!(
        error <= bound + 1e-12,
        "long-time error {error:.6e} above bound {bound:.6e}"
    );
}

#[test]
fn paper_formula_policy_runs_quadrature_study() {
    let grid = StudyGrid {
        kind: StudyKind::Quadrature,
        potential: PotentialSpec::cos_mode_1d(1, 1.0),
        d: 1,
        interval: (0.0, TAU),
        n_list: vec![8],
        dt_list: vec![0.125],
        m_policy: MPolicy::Reference(2048),
        t_total: 0.125,
        m_list: vec![8, 16, 32],
    };
    let opts = StudyOptions {
        scan_k: 5,
        refine_scans: false,
        ..StudyOptions::default()
    };
    let report = run_study(&grid, &opts).unwrap();
    assert_eq!(report.rows.len(), 3);
    assert!(report.violations.is_empty());
}
