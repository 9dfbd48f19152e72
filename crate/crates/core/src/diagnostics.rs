//! Nested-commutator suprema of the interaction-picture family.
//!
//! The three-time family `[[H(sigma), H(s)], H(t)]` is invariant under
//! global conjugation by the free propagator, which removes one time axis:
//! the scans sample `[[H(0), H(tau)], H(s)]` on a square `(tau, s)` grid
//! (window = interval width), and the four-time family on a constrained
//! three-axis grid. Grid cells are independent; cells evaluate concurrently
//! and reduce to the max with a deterministic lexicographic tie-break.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::ScanError;
use crate::linalg::matrix::{matmul, ComplexMatrix};
use crate::linalg::norms::spectral_norm_auto;
use crate::propagators::InteractionHamiltonianEvaluator;

/// Kind of nested-commutator supremum a scan measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ScanKind {
    /// `sup |[[H(sigma), H(s)], H(t)]|`, reduced to two time axes.
    Alpha,
    /// `sup |[[H(sigma), H(s)], [H(tau), H(t)]]|`, reduced to three axes.
    Beta,
}

/// Result of a grid supremum scan.
#[derive(Debug, Clone, Serialize)]
pub struct CommutatorScan {
    pub kind: ScanKind,
    pub interval: (f64, f64),
    pub samples_per_axis: usize,
    pub sup: f64,
    /// Reduced time coordinates attaining the supremum.
    pub argmax_times: Vec<f64>,
    /// Number of operator-norm evaluations performed.
    pub n_evals: usize,
    pub refined: bool,
}

/// Both suprema of one time window, the inputs of the per-step error bound.
#[derive(Debug, Clone, Serialize)]
pub struct CommutatorSuprema {
    pub alpha: CommutatorScan,
    pub beta: CommutatorScan,
}

/// One row of the step-size scaling table for the reduced two-axis family.
#[derive(Debug, Clone, Serialize)]
pub struct SuperconvergenceRow {
    pub dt: f64,
    pub sup_norm: f64,
    /// Implied constant `sup / dt²`.
    pub c_hat: f64,
    /// Tagged when dt lies outside `[1/N, 1]`.
    pub regime_violation: bool,
}

/// Options shared by the scans.
#[derive(Debug, Clone, Copy)]
pub struct ScanOptions {
    /// Base grid points per axis (>= 2).
    pub samples_per_axis: usize,
    /// One local refinement pass around the argmax.
    pub refine: bool,
    pub norm_seed: u64,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self {
            samples_per_axis: 17,
            refine: true,
            norm_seed: crate::linalg::norms::POWER_ITERATION_SEED,
        }
    }
}

/// Supremum of `|[[H(sigma), H(s)], H(t)]|` for times in `[t_lo, t_hi]`,
/// sampled over the reduced family `[[H(0), H(tau)], H(s)]` on a
/// `(tau, s)` grid covering `[-w, w]²` with `w = t_hi - t_lo`.
pub fn scan_alpha(
    ev: &InteractionHamiltonianEvaluator,
    t_lo: f64,
    t_hi: f64,
    opts: &ScanOptions,
) -> Result<CommutatorScan, ScanError> {
    let window = t_hi - t_lo;
    let mut scan = alpha_window_scan(ev, window, opts)?;
    scan.interval = (t_lo, t_hi);
    Ok(scan)
}

/// Two-axis scan over `[-window, window]²`.
pub(crate) fn alpha_window_scan(
    ev: &InteractionHamiltonianEvaluator,
    window: f64,
    opts: &ScanOptions,
) -> Result<CommutatorScan, ScanError> {
    let k = opts.samples_per_axis;
    if k < 2 {
        return Err(ScanError::TooFewSamples { k });
    }
    require_dense(ev)?;
    let taus = grid_points(window, k);

    let mut sup = 0.0;
    let mut argmax = vec![0.0, 0.0];
    let mut n_evals = 0;
    evaluate_alpha_cells(ev, &taus, &taus, opts.norm_seed, &mut sup, &mut argmax, &mut n_evals)?;

    let mut refined = false;
    if opts.refine && k >= 3 {
        let spacing = if k > 1 { 2.0 * window / (k - 1) as f64 } else { window };
        let fine_t = refine_points(argmax[0], spacing, window);
        let fine_s = refine_points(argmax[1], spacing, window);
        evaluate_alpha_cells(ev, &fine_t, &fine_s, opts.norm_seed, &mut sup, &mut argmax, &mut n_evals)?;
        refined = true;
    }

    Ok(CommutatorScan {
        kind: ScanKind::Alpha,
        interval: (-window, window),
        samples_per_axis: k,
        sup,
        argmax_times: argmax,
        n_evals,
        refined,
    })
}

fn evaluate_alpha_cells(
    ev: &InteractionHamiltonianEvaluator,
    taus: &[f64],
    ss: &[f64],
    norm_seed: u64,
    sup: &mut f64,
    argmax: &mut Vec<f64>,
    n_evals: &mut usize,
) -> Result<(), ScanError> {
    let b_hat = ev.b_hat().map_err(|_| ScanError::DenseModeRequired)?;
    // Inner commutators [H(0), H(tau)] once per tau.
    let inner: Vec<ComplexMatrix> = taus
        .par_iter()
        .map(|&tau| {
            let h_tau = ev.hamiltonian_fourier(tau).expect("dense checked");
            hermitian_commutator(b_hat, &h_tau)
        })
        .collect();

    let cells: Vec<(usize, usize)> = (0..taus.len())
        .flat_map(|i| (0..ss.len()).map(move |j| (i, j)))
        .collect();
    let values: Vec<f64> = cells
        .par_iter()
        .map(|&(i, j)| {
            let h_s = ev.hamiltonian_fourier(ss[j]).expect("dense checked");
            let outer = mixed_commutator(&inner[i], &h_s);
            spectral_norm_auto(&outer, norm_seed).expect("norm").value
        })
        .collect();

    *n_evals += values.len();
    for (&(i, j), &v) in cells.iter().zip(&values) {
        let candidate = [taus[i], ss[j]];
        if v > *sup || (v == *sup && candidate.as_slice() < argmax.as_slice()) {
            *sup = v;
            *argmax = candidate.to_vec();
        }
    }
    Ok(())
}

/// Supremum of the four-time family, reduced by one global conjugation to
/// `[[H(x), H(y)], [H(z), H(0)]]` over the polytope of reachable reduced
/// times: all axes in `[-w, w]` with pairwise gaps at most `w`.
pub fn scan_beta(
    ev: &InteractionHamiltonianEvaluator,
    t_lo: f64,
    t_hi: f64,
    opts: &ScanOptions,
) -> Result<CommutatorScan, ScanError> {
    let k = opts.samples_per_axis;
    if k < 2 {
        return Err(ScanError::TooFewSamples { k });
    }
    require_dense(ev)?;
    let b_hat = ev.b_hat().map_err(|_| ScanError::DenseModeRequired)?;
    let window = t_hi - t_lo;
    let points = grid_points(window, k);
    let tol = window * 1e-12;

    let hs: Vec<ComplexMatrix> = points
        .par_iter()
        .map(|&t| ev.hamiltonian_fourier(t).expect("dense checked"))
        .collect();
    let z_blocks: Vec<ComplexMatrix> = hs
        .par_iter()
        .map(|h| hermitian_commutator(h, b_hat))
        .collect();

    // Upper-triangle outer pairs; [H(y), H(x)] = -[H(x), H(y)] shares norms.
    let mut pairs = Vec::new();
    for x in 0..k {
        for y in (x + 1)..k {
            if (points[x] - points[y]).abs() <= window + tol {
                pairs.push((x, y));
            }
        }
    }
    let pair_blocks: Vec<ComplexMatrix> = pairs
        .par_iter()
        .map(|&(x, y)| hermitian_commutator(&hs[x], &hs[y]))
        .collect();

    let mut cells = Vec::new();
    for (pair_idx, &(x, y)) in pairs.iter().enumerate() {
        for z in 0..k {
            if (points[x] - points[z]).abs() <= window + tol
                && (points[y] - points[z]).abs() <= window + tol
            {
                cells.push((pair_idx, z));
            }
        }
    }
    let values: Vec<f64> = cells
        .par_iter()
        .map(|&(pair_idx, z)| {
            let outer = antihermitian_commutator(&pair_blocks[pair_idx], &z_blocks[z]);
            spectral_norm_auto(&outer, opts.norm_seed).expect("norm").value
        })
        .collect();

    let mut sup = 0.0;
    let mut argmax = vec![0.0, 0.0, 0.0];
    for (&(pair_idx, z), &v) in cells.iter().zip(&values) {
        let (x, y) = pairs[pair_idx];
        let candidate = [points[x], points[y], points[z]];
        if v > sup || (v == sup && candidate.as_slice() < argmax.as_slice()) {
            sup = v;
            argmax = candidate.to_vec();
        }
    }

    Ok(CommutatorScan {
        kind: ScanKind::Beta,
        interval: (t_lo, t_hi),
        samples_per_axis: k,
        sup,
        argmax_times: argmax,
        n_evals: cells.len(),
        refined: false,
    })
}

/// Measures both suprema over one step window.
pub fn measure_suprema(
    ev: &InteractionHamiltonianEvaluator,
    t_lo: f64,
    t_hi: f64,
    opts: &ScanOptions,
) -> Result<CommutatorSuprema, ScanError> {
    Ok(CommutatorSuprema {
        alpha: scan_alpha(ev, t_lo, t_hi, opts)?,
        beta: scan_beta(ev, t_lo, t_hi, opts)?,
    })
}

/// Step-size scaling of the reduced two-axis supremum: for each dt, the
/// supremum over `[-dt, dt]²` and the implied constant `sup / dt²`. Rows
/// outside the regime `1/N <= dt <= 1` are computed but tagged.
pub fn superconvergence_constant(
    ev: &InteractionHamiltonianEvaluator,
    dt_list: &[f64],
    opts: &ScanOptions,
) -> Result<Vec<SuperconvergenceRow>, ScanError> {
    let n = ev.hamiltonian_ref().grid().points_per_dim();
    let mut rows = Vec::with_capacity(dt_list.len());
    for &dt in dt_list {
        let scan = alpha_window_scan(ev, dt, opts)?;
        rows.push(SuperconvergenceRow {
            dt,
            sup_norm: scan.sup,
            c_hat: scan.sup / (dt * dt),
            regime_violation: !(1.0 / n as f64 <= dt && dt <= 1.0),
        });
    }
    Ok(rows)
}

/// `|[A, B]|` by power iteration on the operator applied matrix-free through
/// FFTs; works beyond the dense materialization cap. `[A, B]` is
/// anti-Hermitian, so the Gram operator is `-[A, B]²` and its spectrum comes
/// in exactly degenerate pairs; the Rayleigh value converges long before the
/// eigen-residual when the next distinct value is close, so a stalled value
/// is accepted alongside the residual criterion.
pub fn commutator_norm_matrix_free(
    h: &crate::discretization::DiscreteHamiltonian,
    seed: u64,
) -> Result<f64, ScanError> {
    use num_complex::Complex64;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;

    let plans = h.grid().dft_plans();
    let lam = h.kinetic_spectrum().to_vec();
    let b = h.b_diag().to_vec();
    let n = lam.len();

    let apply_a = |v: &mut Vec<Complex64>| {
        plans.transform(v, false);
        for (z, &l) in v.iter_mut().zip(&lam) {
            *z *= l;
        }
        plans.transform(v, true);
    };
    let commutator_apply = |v: &[Complex64]| {
        let mut bv: Vec<Complex64> = v.iter().zip(&b).map(|(z, &d)| z * d).collect();
        apply_a(&mut bv); // A B v
        let mut av = v.to_vec();
        apply_a(&mut av);
        for (w, &d) in av.iter_mut().zip(&b) {
            *w *= d; // B A v
        }
        bv.iter().zip(&av).map(|(x, y)| x - y).collect::<Vec<_>>()
    };

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<Complex64> = (0..n)
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let norm = |v: &[Complex64]| v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let nv = norm(&v);
    for z in v.iter_mut() {
        *z /= nv;
    }
    let mut lambda_prev = f64::INFINITY;
    let mut stalled = 0usize;
    let mut last_residual = f64::INFINITY;
    for iter in 1..=crate::linalg::norms::POWER_ITERATION_CAP {
        // Gram apply: -C(Cv) with C = [A, B].
        let cv = commutator_apply(&v);
        let ccv: Vec<Complex64> = commutator_apply(&cv).iter().map(|z| -z).collect();
        let lambda: f64 = ccv.iter().zip(&v).map(|(w, x)| (w * x.conj()).re).sum();
        let nw = norm(&ccv);
        if nw == 0.0 {
            return Ok(0.0);
        }
        last_residual = ccv
            .iter()
            .zip(&v)
            .map(|(w, x)| (w - x * lambda).norm_sqr())
            .sum::<f64>()
            .sqrt()
            / lambda.abs().max(f64::MIN_POSITIVE);
        v = ccv.iter().map(|z| z / nw).collect();

        if last_residual <= crate::linalg::norms::POWER_ITERATION_TOLERANCE {
            return Ok(lambda.max(0.0).sqrt());
        }
        if (lambda - lambda_prev).abs() <= 1e-13 * lambda.abs().max(f64::MIN_POSITIVE) {
            stalled += 1;
            if stalled >= 3 {
                return Ok(lambda.max(0.0).sqrt());
            }
        } else {
            stalled = 0;
        }
        lambda_prev = lambda;
        let _ = iter;
    }
    Err(ScanError::Linalg(
        crate::error::LinalgError::ConvergenceFailure {
            iterations: crate::linalg::norms::POWER_ITERATION_CAP,
            residual: last_residual,
        },
    ))
}

fn require_dense(ev: &InteractionHamiltonianEvaluator) -> Result<(), ScanError> {
    ev.b_hat().map(|_| ()).map_err(|_| ScanError::DenseModeRequired)
}

fn grid_points(window: f64, k: usize) -> Vec<f64> {
    (0..k)
        .map(|i| -window + 2.0 * window * i as f64 / (k - 1) as f64)
        .collect()
}

fn refine_points(center: f64, spacing: f64, window: f64) -> Vec<f64> {
    const REFINE_POINTS: usize = 5;
    (0..REFINE_POINTS)
        .map(|i| {
            let offset = spacing * (i as f64 / (REFINE_POINTS - 1) as f64 * 2.0 - 1.0);
            (center + offset).clamp(-window, window)
        })
        .collect()
}

/// `[X, Y] = XY - (XY)†` for Hermitian X, Y; one product.
fn hermitian_commutator(x: &ComplexMatrix, y: &ComplexMatrix) -> ComplexMatrix {
    let xy = matmul(x, y);
    let n = xy.rows();
    ComplexMatrix::from_fn(n, n, |i, j| xy.get(i, j) - xy.get(j, i).conj())
}

/// `[W, H] = WH + (WH)†` for anti-Hermitian W and Hermitian H.
fn mixed_commutator(w: &ComplexMatrix, h: &ComplexMatrix) -> ComplexMatrix {
    let wh = matmul(w, h);
    let n = wh.rows();
    ComplexMatrix::from_fn(n, n, |i, j| wh.get(i, j) + wh.get(j, i).conj())
}

/// `[W, U] = WU - (WU)†` for anti-Hermitian W, U.
fn antihermitian_commutator(w: &ComplexMatrix, u: &ComplexMatrix) -> ComplexMatrix {
    let wu = matmul(w, u);
    let n = wu.rows();
    ComplexMatrix::from_fn(n, n, |i, j| wu.get(i, j) - wu.get(j, i).conj())
}
