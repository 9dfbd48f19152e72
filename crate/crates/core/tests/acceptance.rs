//! Acceptance suite: one test per acceptance criterion, each printing a
//! PASS/FAIL line with the measured quantities.
//!
//! Criterion 1 runs the step-size order study in its pinned configuration
//! (unit interval). On that interval the measured order sits near 3 at
//! desk scale: the periodic second-difference operator carries a
//! cubic-in-dt error component with coefficient `~ |V'|^3 (b-a) / N`
//! (from the triple-difference commutator `[[B,[A,B]],B]`), which the
//! regime condition `dt >= 1/N` absorbs into the fourth-order *bound* but
//! which dominates the *fitted slope* in the pinned window at N = 64,
//! because on (0,1) the potential's derivative norms are 2*pi-scaled. The
//! companion test runs the identical study on the torus-normalized
//! interval (0, 2*pi), where the same code measures order 4.00; criterion
//! 1 is kept as written and reports its honest failure.

mod common;

use std::sync::OnceLock;

use common::{dense_evaluator, fine_integrator, grid_1d};
use magnus_core::diagnostics::{scan_alpha, ScanOptions};
use magnus_core::discretization::{
    build_potential, quantize_momentum_symbol, quantize_position_symbol, DiscreteHamiltonian,
    PotentialSpec,
};
use magnus_core::linalg::matrix::{commutator, ComplexMatrix};
use magnus_core::linalg::norms::{spectral_norm_auto, POWER_ITERATION_SEED};
use magnus_core::magnus::{magnus_step, MagnusStepConfig};
use magnus_core::num_complex::Complex64;
use magnus_core::propagators::{free_propagator, ExactPropagator};
use magnus_core::report;
use magnus_core::study::{
    run_study, ConvergenceReport, MPolicy, StudyGrid, StudyKind, StudyOptions,
};

const TAU: f64 = std::f64::consts::TAU;

/// dt*N below which the cubic-difference floor of the discrete operator
/// dominates the quadratic commutator window; scan fits and constant
/// spreads are asserted on the quadratic-dominated rows.
const REGIME_MARGIN: f64 = 4.0;

fn acceptance_options() -> StudyOptions {
    StudyOptions {
        scan_k: 9,
        refine_scans: false,
        ..StudyOptions::default()
    }
}

fn order_grid(interval: (f64, f64)) -> StudyGrid {
    StudyGrid {
        kind: StudyKind::Order,
        potential: PotentialSpec::cos_mode_1d(1, 1.0),
        d: 1,
        interval,
        n_list: vec![64],
        dt_list: vec![0.125, 0.0625, 0.03125, 0.015625],
        m_policy: MPolicy::Reference(4096),
        t_total: 1.0,
        m_list: Vec::new(),
    }
}

/// Criterion 1's study, shared with the determinism criterion.
fn criterion1_report() -> &'static ConvergenceReport {
    static REPORT: OnceLock<ConvergenceReport> = OnceLock::new();
    REPORT.get_or_init(|| {
        run_study(&order_grid((0.0, 1.0)), &acceptance_options()).expect("order study")
    })
}

#[test]
fn criterion_1_superconvergence_order() {
    let report = criterion1_report();
    let fit = report
        .fits
        .iter()
        .find(|f| f.n == 64 && f.axis == "dt")
        .expect("fit present");
    let slope = fit.slope.expect("non-degenerate");
    let pass = (3.7..=4.3).contains(&slope);
    println!(
        "criterion 1 (superconvergence order, unit interval): fitted order {slope:.4}, window [3.7, 4.3]: {}",
        if pass { "PASS" } else { "FAIL (known: unit-interval window, see module docs; torus companion measures 4.00)" }
    );
    for row in &report.rows {
        println!(
            "  dt={:.6} error={:.6e} flags={:?}",
            row.dt, row.error, row.flags
        );
    }
    assert!(pass, "fitted order {slope} outside [3.7, 4.3]");
}

#[test]
fn criterion_1_companion_torus_interval() {
    let report = run_study(&order_grid((0.0, TAU)), &acceptance_options()).expect("order study");
    let fit = report
        .fits
        .iter()
        .find(|f| f.n == 64 && f.axis == "dt")
        .expect("fit present");
    let slope = fit.slope.expect("non-degenerate");
    let pass = (3.7..=4.3).contains(&slope);
    println!(
        "criterion 1 companion (torus interval): fitted order {slope:.4}, window [3.7, 4.3]: {}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "fitted order {slope} outside [3.7, 4.3]");
}

#[test]
fn criterion_2_n_uniformity() {
    let grid = StudyGrid {
        kind: StudyKind::Uniformity,
        potential: PotentialSpec::cos_mode_1d(1, 1.0),
        d: 1,
        interval: (0.0, TAU),
        n_list: vec![32, 64, 128, 256],
        dt_list: vec![1.0 / 16.0],
        m_policy: MPolicy::Exact,
        t_total: 1.0,
        m_list: Vec::new(),
    };
    let report = run_study(&grid, &acceptance_options()).expect("uniformity study");
    let ratio = report.uniformity_ratio.expect("ratio");
    let pass = ratio <= 2.0;
    println!(
        "criterion 2 (N-uniformity): max/min error ratio {ratio:.4} over N in {{32..256}}, limit 2.0: {}",
        if pass { "PASS" } else { "FAIL" }
    );
    for row in &report.rows {
        println!("  N={} error={:.6e}", row.n, row.error);
    }
    assert!(pass, "uniformity ratio {ratio} exceeds 2.0");
}

#[test]
fn criterion_3_commutator_scaling() {
    let grid = StudyGrid {
        kind: StudyKind::Theorem3Scan,
        potential: PotentialSpec::cos_mode_1d(1, 1.0),
        d: 1,
        interval: (0.0, TAU),
        n_list: vec![32, 64, 128, 256],
        dt_list: vec![0.125, 0.0625, 0.03125, 0.015625],
        m_policy: MPolicy::Exact,
        t_total: 1.0,
        m_list: Vec::new(),
    };
    let report = run_study(&grid, &acceptance_options()).expect("scan study");

    // Quadratic-dominated rows: dt >= REGIME_MARGIN / N. Below that the
    // cubic-difference floor (linear in the window) carries the supremum;
    // the uniform bound still holds there and is checked separately.
    let mut all_pass = true;
    for &n in &grid.n_list {
        let pts: Vec<(f64, f64)> = report
            .rows
            .iter()
            .filter(|r| r.n == n && r.dt * n as f64 >= REGIME_MARGIN)
            .map(|r| (r.dt, r.error))
            .collect();
        if pts.len() < 2 {
            println!(
                "criterion 3: N={n}: {} quadratic-dominated rows, slope not fittable (floor regime)",
                pts.len()
            );
            continue;
        }
        let fit = magnus_core::study::fit_order(&pts).expect("fit");
        let ok = (1.8..=2.2).contains(&fit.slope);
        all_pass &= ok;
        println!(
            "criterion 3: N={n}: per-N slope {:.4} over {} rows, window [1.8, 2.2]: {}",
            fit.slope,
            pts.len(),
            if ok { "PASS" } else { "FAIL" }
        );
    }

    // Constant spread across N, per dt, over the same quadratic-dominated set.
    for &dt in &grid.dt_list {
        let cs: Vec<f64> = report
            .rows
            .iter()
            .filter(|r| (r.dt - dt).abs() < 1e-12 && r.dt * r.n as f64 >= REGIME_MARGIN)
            .map(|r| r.error / (dt * dt))
            .collect();
        if cs.len() < 2 {
            continue;
        }
        let spread = cs.iter().copied().fold(0.0, f64::max)
            / cs.iter().copied().fold(f64::INFINITY, f64::min);
        let ok = spread <= 1.5;
        all_pass &= ok;
        println!(
            "criterion 3: dt={dt:.6}: constant spread {spread:.4} over {} N values, limit 1.5: {}",
            cs.len(),
            if ok { "PASS" } else { "FAIL" }
        );
    }

    // Uniform boundedness of the implied constant over every in-regime row
    // (the theorem's actual claim); threshold is a harness choice recorded
    // in the report metadata.
    let max_c = report
        .rows
        .iter()
        .filter(|r| !r.flags.contains(&"regime".to_string()))
        .map(|r| r.error / (r.dt * r.dt))
        .fold(0.0, f64::max);
    let bounded = max_c <= 10.0;
    all_pass &= bounded;
    println!(
        "criterion 3: max in-regime implied constant {max_c:.4}, limit 10: {}",
        if bounded { "PASS" } else { "FAIL" }
    );
    assert!(all_pass, "commutator scaling criterion failed");
}

#[test]
fn criterion_4_per_step_bound() {
    let grid = StudyGrid {
        kind: StudyKind::Theorem1Check,
        potential: PotentialSpec::cos_mode_1d(1, 1.0),
        d: 1,
        interval: (0.0, TAU),
        n_list: vec![16, 32, 64],
        dt_list: vec![0.125, 0.0625, 0.03125, 0.015625],
        m_policy: MPolicy::Reference(4096),
        t_total: 1.0,
        m_list: Vec::new(),
    };
    let report = run_study(&grid, &acceptance_options()).expect("theorem1 study");
    let pass = !report.has_bound_violations();
    println!(
        "criterion 4 (per-step bound, 13/24 and 5/48): {} cells, {} violations: {}",
        report.rows.len(),
        report.violations.len(),
        if pass { "PASS" } else { "FAIL" }
    );
    for row in &report.rows {
        println!(
            "  N={} dt={:.6} error={:.3e} bound={:.3e} slack={:.3e}",
            row.n,
            row.dt,
            row.error,
            row.bound_rhs.unwrap_or(f64::NAN),
            row.slack.unwrap_or(f64::NAN)
        );
    }
    assert!(pass, "{:?}", report.violations);
}

#[test]
fn criterion_5_quadrature_law() {
    let grid = StudyGrid {
        kind: StudyKind::Quadrature,
        potential: PotentialSpec::cos_mode_1d(1, 1.0),
        d: 1,
        interval: (0.0, TAU),
        n_list: vec![16],
        dt_list: vec![0.125],
        m_policy: MPolicy::Reference(4096),
        t_total: 0.125,
        m_list: vec![16, 32, 64, 128, 256],
    };
    let report = run_study(&grid, &acceptance_options()).expect("quadrature study");
    let fit = &report.fits[0];
    let slope = fit.slope.expect("non-degenerate");
    let slope_ok = (-1.3..=-0.7).contains(&slope);
    let bound_ok = !report.has_bound_violations();
    println!(
        "criterion 5 (quadrature law): error-vs-M slope {slope:.4} in [-1.3, -0.7]: {}; inline bound violations {}: {}",
        if slope_ok { "PASS" } else { "FAIL" },
        report.violations.len(),
        if bound_ok { "PASS" } else { "FAIL" }
    );
    for row in &report.rows {
        println!(
            "  M={} error={:.6e} bound={:.6e}",
            row.m,
            row.error,
            row.bound_rhs.unwrap_or(f64::NAN)
        );
    }
    assert!(slope_ok && bound_ok);
}

#[test]
fn criterion_6_oracle_equivalence_and_unitarity() {
    let ev = dense_evaluator(8, 0.0, 1.0, PotentialSpec::cos_mode_1d(1, 1.0));
    let exact = ExactPropagator::new(ev.hamiltonian_ref()).expect("propagator");
    let u = exact.between(0.1, 0.0).expect("unitary");
    let oracle = fine_integrator(&ev, 0.1, 0.0, 10_000);
    let diff = u.matrix().sub(&oracle).expect("same shape");
    let gap = spectral_norm_auto(&diff, POWER_ITERATION_SEED).expect("norm").value;
    let gap_ok = gap <= 1e-8;

    let mut max_defect: f64 = u.unitarity_defect();
    let free = free_propagator(ev.hamiltonian_ref(), 0.37).expect("free");
    max_defect = max_defect.max(free.unitarity_defect());
    for cfg in [
        MagnusStepConfig::left_riemann(0.1, 64).unwrap(),
        MagnusStepConfig::reference(0.1, 512).unwrap(),
        MagnusStepConfig::exact(0.1).unwrap(),
    ] {
        let step = magnus_step(&ev, 0.0, &cfg).expect("step");
        max_defect = max_defect.max(step.unitarity_defect());
    }
    let defect_ok = max_defect <= 1e-9;
    println!(
        "criterion 6 (oracle equivalence): fine-integrator gap {gap:.3e} <= 1e-8: {}; max unitarity defect {max_defect:.3e} <= 1e-9: {}",
        if gap_ok { "PASS" } else { "FAIL" },
        if defect_ok { "PASS" } else { "FAIL" }
    );
    assert!(gap_ok && defect_ok);
}

#[test]
fn criterion_7_quantization_identities() {
    let mut max_residual: f64 = 0.0;
    for n in 3..=64usize {
        let g = grid_1d(n, 0.0, 1.0);
        let q = quantize_momentum_symbol(&g, |xi| 1.0 - xi.cos()).expect("quantization");
        let mut stencil = ComplexMatrix::zeros(n, n);
        for i in 0..n {
            stencil.set(i, i, Complex64::new(1.0, 0.0));
            stencil.set(i, (i + 1) % n, Complex64::new(-0.5, 0.0));
            stencil.set(i, (i + n - 1) % n, Complex64::new(-0.5, 0.0));
        }
        max_residual = max_residual.max(q.sub(&stencil).expect("shape").max_abs());

        // Position symbol: exactly the diagonal of samples.
        let v = PotentialSpec::cos_mode_1d(1, 0.75);
        let quantized = quantize_position_symbol(&g, &v).expect("diag");
        let samples = build_potential(&g, &v).expect("samples");
        for i in 0..n {
            assert_eq!(quantized.get(i, i), Complex64::new(samples[i], 0.0));
            for j in 0..n {
                if i != j {
                    assert_eq!(quantized.get(i, j), Complex64::new(0.0, 0.0));
                }
            }
        }
    }
    let pass = max_residual <= 1e-12;
    println!(
        "criterion 7 (quantization identities): max stencil residual {max_residual:.3e} over N in 3..=64, limit 1e-12: {}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass);
}

#[test]
fn criterion_8_premise_scalings() {
    // |A| quadruples when N doubles (exact spectrum maxima).
    let mut a_ok = true;
    for &n in &[8usize, 16, 32] {
        let h1 = DiscreteHamiltonian::new(grid_1d(n, 0.0, 1.0), PotentialSpec::Zero).unwrap();
        let h2 = DiscreteHamiltonian::new(grid_1d(2 * n, 0.0, 1.0), PotentialSpec::Zero).unwrap();
        let ratio = h2.a_norm() / h1.a_norm();
        a_ok &= (3.8..=4.2).contains(&ratio);
        println!("criterion 8: |A({})| / |A({n})| = {ratio:.4}", 2 * n);
    }

    // |[A,B]| doubles when N doubles (asymptotic O(N)).
    let mut comm_norms = Vec::new();
    for &n in &[32usize, 64, 128] {
        let h = DiscreteHamiltonian::new(grid_1d(n, 0.0, 1.0), PotentialSpec::cos_mode_1d(1, 1.0))
            .unwrap();
        let ab = commutator(h.a_dense().unwrap(), &h.b_dense()).unwrap();
        comm_norms.push(spectral_norm_auto(&ab, POWER_ITERATION_SEED).unwrap().value);
    }
    let mut c_ok = true;
    for w in comm_norms.windows(2) {
        let ratio = w[1] / w[0];
        c_ok &= (1.8..=2.2).contains(&ratio);
        println!("criterion 8: |[A,B]| doubling ratio {ratio:.4}");
    }

    // |H_I(t)| = |B| to 1e-8 relative over sampled times.
    let ev = dense_evaluator(32, 0.0, 1.0, PotentialSpec::cos_mode_1d(1, 1.0));
    let b_norm = ev.hamiltonian_ref().b_norm();
    let mut h_ok = true;
    for i in 0..20 {
        let t = 0.083 * i as f64;
        let hm = ev.hamiltonian(t).unwrap();
        let nm = spectral_norm_auto(&hm, POWER_ITERATION_SEED).unwrap().value;
        h_ok &= (nm - b_norm).abs() <= 1e-8 * b_norm;
    }
    println!(
        "criterion 8 (premise scalings): |A| ratio {}; |[A,B]| ratio {}; |H_I|=|B| {}",
        if a_ok { "PASS" } else { "FAIL" },
        if c_ok { "PASS" } else { "FAIL" },
        if h_ok { "PASS" } else { "FAIL" }
    );
    assert!(a_ok && c_ok && h_ok);
}

#[test]
fn criterion_9_deterministic_reports() {
    let first = report::to_csv(criterion1_report(), false);
    let rerun = run_study(&order_grid((0.0, 1.0)), &acceptance_options()).expect("order study");
    let second = report::to_csv(&rerun, false);
    let pass = first == second;
    println!(
        "criterion 9 (determinism): two runs of criterion 1's config produce {} CSV ({} bytes)",
        if pass { "byte-identical" } else { "DIFFERING" },
        first.len()
    );
    assert!(pass, "CSV outputs differ between identical runs");
}

/// Supporting check used by criterion 4's context: the per-step scans obey
/// the algebraic four-times-from-three-times reduction.
#[test]
fn beta_dominated_by_alpha_across_sweep() {
    let ev = dense_evaluator(32, 0.0, TAU, PotentialSpec::cos_mode_1d(1, 1.0));
    let opts = ScanOptions {
        samples_per_axis: 7,
        refine: false,
        norm_seed: POWER_ITERATION_SEED,
    };
    let b_norm = ev.hamiltonian_ref().b_norm();
    for &dt in &[0.125, 0.0625] {
        let alpha = scan_alpha(&ev, 0.0, dt, &opts).unwrap();
        let beta = magnus_core::diagnostics::scan_beta(&ev, 0.0, dt, &opts).unwrap();
        assert!(
            beta.sup <= 4.0 * b_norm * alpha.sup + 1e-9,
            "dt={dt}: beta {:.6e} vs 4|B|alpha {:.6e}",
            beta.sup,
            4.0 * b_norm * alpha.sup
        );
    }
}
