//! Sweep harness for the convergence studies: step-size order, N-uniformity,
//! quadrature scaling, per-step bound checks, and commutator scaling scans.
//!
//! Cells are deterministic pure computations; rows are sorted by
//! (study kind, N, dt, M) before serialization so identical configs yield
//! identical reports. All randomness (power-iteration starts) derives from
//! the configured seed.

use std::time::Instant;

use serde::Serialize;

use crate::diagnostics::{
    alpha_window_scan, scan_beta, superconvergence_constant, ScanOptions,
};
use crate::discretization::{DiscreteHamiltonian, PotentialSpec, SpatialGrid};
use crate::error::{FitError, StudyError};
use crate::linalg::matrix::ComplexMatrix;
use crate::linalg::norms::spectral_norm_auto;
use crate::magnus::{
    assemble_omega2_fourier, evolve_fourier, magnus_step_fourier, recommended_quadrature_points,
    MagnusStepConfig, QuadratureRule,
};
use crate::propagators::{ExactPropagator, InteractionHamiltonianEvaluator};

/// Local truncation constants of the per-step error bound.
pub const BOUND_THIRD_ORDER_COEFF: f64 = 13.0 / 24.0;
pub const BOUND_FOURTH_ORDER_COEFF: f64 = 5.0 / 48.0;

/// Error level below which a cell carries no convergence signal (roundoff
/// from unitarity defects and norm estimation); studies whose cells all sit
/// below it are flagged degenerate instead of fitted.
pub const DEGENERACY_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StudyKind {
    Order,
    Uniformity,
    Quadrature,
    Theorem1Check,
    Theorem3Scan,
}

impl StudyKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            StudyKind::Order => "order",
            StudyKind::Uniformity => "uniformity",
            StudyKind::Quadrature => "quadrature",
            StudyKind::Theorem1Check => "theorem1_check",
            StudyKind::Theorem3Scan => "theorem3_scan",
        }
    }
}

/// Quadrature policy of a study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum MPolicy {
    /// Left-Riemann nodes with a fixed count: the algorithm as run.
    Fixed(usize),
    /// Midpoint nodes at a large count: reference-grade exponent.
    Reference(usize),
    /// Left-Riemann with the point count from the balance estimate.
    PaperFormula,
    /// Closed-form integrals; no quadrature error.
    Exact,
}

impl MPolicy {
    pub fn describe(&self) -> String {
        match self {
            MPolicy::Fixed(m) => format!("fixed({m})"),
            MPolicy::Reference(m) => format!("reference({m})"),
            MPolicy::PaperFormula => "paper_formula".to_string(),
            MPolicy::Exact => "exact".to_string(),
        }
    }

    fn step_config(&self, dt: f64) -> Result<MagnusStepConfig, StudyError> {
        Ok(match self {
            MPolicy::Fixed(m) => MagnusStepConfig::left_riemann(dt, *m)?,
            MPolicy::Reference(m) => MagnusStepConfig::reference(dt, *m)?,
            MPolicy::Exact | MPolicy::PaperFormula => MagnusStepConfig::exact(dt)?,
        })
    }
}

/// Cartesian sweep description.
#[derive(Debug, Clone, Serialize)]
pub struct StudyGrid {
    pub kind: StudyKind,
    pub potential: PotentialSpec,
    pub d: usize,
    pub interval: (f64, f64),
    pub n_list: Vec<usize>,
    pub dt_list: Vec<f64>,
    pub m_policy: MPolicy,
    pub t_total: f64,
    /// Node-count sweep of the quadrature study.
    pub m_list: Vec<usize>,
}

/// Harness thresholds; recorded in report metadata, configurable from the
/// CLI. Only the per-step bound check is asserted by the harness itself.
#[derive(Debug, Clone, Serialize)]
pub struct Tolerances {
    pub order_slope_range: (f64, f64),
    pub comm_slope_range: (f64, f64),
    pub quadrature_slope_range: (f64, f64),
    pub uniformity_ratio_max: f64,
    pub c_spread_max: f64,
    pub theorem1_slack: f64,
    /// Quadrature-to-total error ratio above which a reference cell is
    /// flagged as contaminated.
    pub quadrature_contamination: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            order_slope_range: (3.7, 4.3),
            comm_slope_range: (1.8, 2.2),
            quadrature_slope_range: (-1.3, -0.7),
            uniformity_ratio_max: 2.0,
            c_spread_max: 1.5,
            theorem1_slack: 1e-12,
            quadrature_contamination: 0.01,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StudyOptions {
    pub seed: u64,
    /// 0 keeps the global thread pool.
    pub workers: usize,
    pub scan_k: usize,
    pub refine_scans: bool,
    pub error_floor: f64,
    pub record_wall_time: bool,
    pub tolerances: Tolerances,
}

impl Default for StudyOptions {
    fn default() -> Self {
        Self {
            seed: crate::linalg::norms::POWER_ITERATION_SEED,
            workers: 0,
            scan_k: 17,
            refine_scans: true,
            error_floor: 1e-14,
            record_wall_time: false,
            tolerances: Tolerances::default(),
        }
    }
}

/// One measured cell.
#[derive(Debug, Clone, Serialize)]
pub struct ReportRow {
    pub study_kind: StudyKind,
    pub n: usize,
    pub d: usize,
    pub dt: f64,
    /// Quadrature nodes; 0 for the closed-form rule.
    pub m: usize,
    pub t_total: f64,
    pub error: f64,
    pub alpha_sup: Option<f64>,
    pub beta_sup: Option<f64>,
    pub bound_rhs: Option<f64>,
    pub slack: Option<f64>,
    pub wall_time_s: f64,
    pub flags: Vec<String>,
}

/// Least-squares fit of `log error` against `log x`.
#[derive(Debug, Clone, Serialize)]
pub struct OrderFit {
    pub n: usize,
    /// What the fit ran over: "dt", "m", or "bound_vs_dt".
    pub axis: &'static str,
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    pub max_residual: Option<f64>,
    pub points_used: usize,
    pub points_floored: usize,
    pub degenerate: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportMetadata {
    pub version: String,
    pub seed: u64,
    pub workers: usize,
    pub potential: String,
    pub potential_smooth: bool,
    pub m_policy: String,
    pub scan_k: usize,
    pub refine_scans: bool,
    pub error_floor: f64,
    pub tolerances: Tolerances,
    /// Wall-clock of the full study; not part of the deterministic surface.
    pub total_wall_time_s: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub kind: StudyKind,
    pub rows: Vec<ReportRow>,
    pub fits: Vec<OrderFit>,
    pub uniformity_ratio: Option<f64>,
    /// Max over dt of (max over N / min over N) of the implied constant.
    pub c_spread: Option<f64>,
    pub violations: Vec<String>,
    pub metadata: ReportMetadata,
}

impl ConvergenceReport {
    pub fn has_bound_violations(&self) -> bool {
        !self.violations.is_empty()
    }
}

/// Core least-squares order fit on `(x, error)` pairs in log-log space.
/// Points at or below the floor are excluded and reported.
pub fn fit_order(points: &[(f64, f64)]) -> Result<OrderFitCore, FitError> {
    fit_order_with_floor(points, 1e-14)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct OrderFitCore {
    pub slope: f64,
    pub intercept: f64,
    pub max_residual: f64,
    pub points_used: usize,
    pub points_floored: usize,
}

pub fn fit_order_with_floor(points: &[(f64, f64)], floor: f64) -> Result<OrderFitCore, FitError> {
    let usable: Vec<(f64, f64)> = points
        .iter()
        .copied()
        .filter(|&(_, e)| e > floor)
        .collect();
    let floored = points.len() - usable.len();
    if usable.is_empty() {
        return Err(FitError::AllPointsFloored {
            count: points.len(),
            floor,
        });
    }
    if usable.len() < 2 {
        return Err(FitError::InsufficientPoints { found: usable.len() });
    }
    let logs: Vec<(f64, f64)> = usable.iter().map(|&(x, e)| (x.ln(), e.ln())).collect();
    let n = logs.len() as f64;
    let sx: f64 = logs.iter().map(|p| p.0).sum();
    let sy: f64 = logs.iter().map(|p| p.1).sum();
    let sxx: f64 = logs.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = logs.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom == 0.0 {
        return Err(FitError::InsufficientPoints { found: 1 });
    }
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / n;
    let max_residual = logs
        .iter()
        .map(|&(x, y)| (y - (intercept + slope * x)).abs())
        .fold(0.0, f64::max);
    Ok(OrderFitCore {
        slope,
        intercept,
        max_residual,
        points_used: logs.len(),
        points_floored: floored,
    })
}

/// Dispatches on the grid's study kind.
pub fn run_study(grid: &StudyGrid, opts: &StudyOptions) -> Result<ConvergenceReport, StudyError> {
    if opts.workers > 0 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(opts.workers)
            .build()
            .expect("thread pool");
        pool.install(|| run_study_inner(grid, opts))
    } else {
        run_study_inner(grid, opts)
    }
}

fn run_study_inner(grid: &StudyGrid, opts: &StudyOptions) -> Result<ConvergenceReport, StudyError> {
    match grid.kind {
        StudyKind::Order => run_order_study(grid, opts),
        StudyKind::Uniformity => run_uniformity_study(grid, opts),
        StudyKind::Quadrature => run_quadrature_study(grid, opts),
        StudyKind::Theorem1Check => run_theorem1_check(grid, opts),
        StudyKind::Theorem3Scan => run_theorem3_scan(grid, opts),
    }
}

struct Cell {
    evaluator: InteractionHamiltonianEvaluator,
}

impl Cell {
    fn build(grid: &StudyGrid, n: usize) -> Result<Self, StudyError> {
        let g = SpatialGrid::new(grid.d, n, grid.interval.0, grid.interval.1)?;
        let ham = DiscreteHamiltonian::new(g, grid.potential.clone())?;
        let evaluator = InteractionHamiltonianEvaluator::dense(ham)?;
        Ok(Self { evaluator })
    }

    fn scan_opts(&self, opts: &StudyOptions) -> ScanOptions {
        ScanOptions {
            samples_per_axis: opts.scan_k,
            refine: opts.refine_scans,
            norm_seed: opts.seed,
        }
    }
}

fn op_norm(m: &ComplexMatrix, seed: u64) -> Result<f64, StudyError> {
    Ok(spectral_norm_auto(m, seed)?.value)
}

fn metadata(grid: &StudyGrid, opts: &StudyOptions, started: Instant) -> ReportMetadata {
    ReportMetadata {
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed: opts.seed,
        workers: opts.workers,
        potential: grid.potential.describe(),
        potential_smooth: grid.potential.is_smooth(),
        m_policy: grid.m_policy.describe(),
        scan_k: opts.scan_k,
        refine_scans: opts.refine_scans,
        error_floor: opts.error_floor,
        tolerances: opts.tolerances.clone(),
        total_wall_time_s: started.elapsed().as_secs_f64(),
    }
}

fn sort_rows(rows: &mut [ReportRow]) {
    rows.sort_by(|a, b| {
        (a.study_kind.as_str(), a.n, a.dt, a.m)
            .partial_cmp(&(b.study_kind.as_str(), b.n, b.dt, b.m))
            .expect("finite keys")
    });
}

fn steps_for(t_total: f64, dt: f64) -> Result<(usize, f64), StudyError> {
    let steps = (t_total / dt).round() as usize;
    if steps == 0 || (steps as f64 * dt - t_total).abs() > 1e-9 * t_total.max(1.0) {
        return Err(StudyError::BadDtList { min: 1 });
    }
    Ok((steps, t_total / steps as f64))
}

/// Per-step quadrature error estimate of a reference-grade exponent: the
/// exponent gap between the configured rule and the closed-form integrals on
/// the first step.
fn reference_quadrature_gap(
    ev: &InteractionHamiltonianEvaluator,
    cfg: &MagnusStepConfig,
    seed: u64,
) -> Result<f64, StudyError> {
    if matches!(cfg.rule, QuadratureRule::Exact) {
        return Ok(0.0);
    }
    let approx = assemble_omega2_fourier(ev, 0.0, cfg)?;
    let exact = assemble_omega2_fourier(ev, 0.0, &MagnusStepConfig::exact(cfg.dt)?)?;
    let diff = approx.omega().sub(&exact.omega())?;
    op_norm(&diff, seed)
}

fn validate_dt_list(dt_list: &[f64], min_len: usize) -> Result<(), StudyError> {
    if dt_list.len() < min_len || dt_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(StudyError::BadDtList { min: min_len });
    }
    Ok(())
}

/// Long-time error against the exact propagator, per (N, dt), with fitted
/// per-N orders. Requires a reference-grade policy so quadrature error stays
/// below truncation error; contaminated cells are flagged, not failed.
pub fn run_order_study(grid: &StudyGrid, opts: &StudyOptions) -> Result<ConvergenceReport, StudyError> {
    expect_kind(grid, StudyKind::Order)?;
    validate_dt_list(&grid.dt_list, 2)?;
    if !matches!(grid.m_policy, MPolicy::Reference(_) | MPolicy::Exact) {
        return Err(StudyError::WrongStudyKind {
            expected: "order study needs reference or exact M policy".into(),
            found: grid.m_policy.describe(),
        });
    }
    let started = Instant::now();
    let mut rows = Vec::new();
    let mut fits = Vec::new();

    for &n in &grid.n_list {
        let cell = Cell::build(grid, n)?;
        let exact = ExactPropagator::new(cell.evaluator.hamiltonian_ref())?;
        let mut points = Vec::new();

        for &dt_requested in &grid.dt_list {
            let cell_start = Instant::now();
            let (steps, dt) = steps_for(grid.t_total, dt_requested)?;
            let cfg = grid.m_policy.step_config(dt)?;

            let u = evolve_fourier(&cell.evaluator, grid.t_total, steps, &cfg)?;
            let u_exact = exact.between_fourier(grid.t_total, 0.0);
            let error = op_norm(&u.sub(&u_exact)?, opts.seed)?;

            let scans = cell.scan_opts(opts);
            let alpha = alpha_window_scan(&cell.evaluator, dt, &scans)?;
            let beta = scan_beta(&cell.evaluator, 0.0, dt, &scans)?;
            let per_step_bound = BOUND_THIRD_ORDER_COEFF * dt.powi(3) * alpha.sup
                + BOUND_FOURTH_ORDER_COEFF * dt.powi(4) * beta.sup;

            let quad_gap = reference_quadrature_gap(&cell.evaluator, &cfg, opts.seed)?;
            let quad_total = steps as f64 * quad_gap;
            let mut flags = Vec::new();
            if error > opts.error_floor
                && quad_total > opts.tolerances.quadrature_contamination * error
            {
                flags.push("quadrature_contamination".to_string());
            }
            let bound = steps as f64 * per_step_bound + quad_total;

            points.push((dt, error));
            rows.push(ReportRow {
                study_kind: grid.kind,
                n,
                d: grid.d,
                dt,
                m: quadrature_points_of(&cfg),
                t_total: grid.t_total,
                error,
                alpha_sup: Some(alpha.sup),
                beta_sup: Some(beta.sup),
                bound_rhs: Some(bound),
                slack: Some(bound - error),
                wall_time_s: cell_start.elapsed().as_secs_f64(),
                flags,
            });
        }
        fits.push(make_fit(n, "dt", &points, opts.error_floor));
    }

    sort_rows(&mut rows);
    Ok(ConvergenceReport {
        kind: grid.kind,
        rows,
        fits,
        uniformity_ratio: None,
        c_spread: None,
        violations: Vec::new(),
        metadata: metadata(grid, opts, started),
    })
}

/// Long-time error across N at one fixed (dt, T); ratio max/min reported.
pub fn run_uniformity_study(
    grid: &StudyGrid,
    opts: &StudyOptions,
) -> Result<ConvergenceReport, StudyError> {
    expect_kind(grid, StudyKind::Uniformity)?;
    if grid.dt_list.len() != 1 {
        return Err(StudyError::BadDtList { min: 1 });
    }
    if grid.n_list.is_empty() {
        return Err(StudyError::EmptyNList);
    }
    let started = Instant::now();
    let (steps, dt) = steps_for(grid.t_total, grid.dt_list[0])?;
    let mut rows = Vec::new();

    for &n in &grid.n_list {
        let cell_start = Instant::now();
        let cell = Cell::build(grid, n)?;
        let exact = ExactPropagator::new(cell.evaluator.hamiltonian_ref())?;
        let cfg = grid.m_policy.step_config(dt)?;
        let u = evolve_fourier(&cell.evaluator, grid.t_total, steps, &cfg)?;
        let u_exact = exact.between_fourier(grid.t_total, 0.0);
        let error = op_norm(&u.sub(&u_exact)?, opts.seed)?;

        let scans = cell.scan_opts(opts);
        let alpha = alpha_window_scan(&cell.evaluator, dt, &scans)?;
        // Four-time supremum bounded through the three-time one; the direct
        // three-axis scan is disproportionate at the largest N here.
        let b_norm = cell.evaluator.hamiltonian_ref().b_norm();
        let bound = steps as f64
            * dt.powi(3)
            * alpha.sup
            * (BOUND_THIRD_ORDER_COEFF + (5.0 / 12.0) * dt * b_norm);

        let mut flags = Vec::new();
        if dt < 1.0 / n as f64 {
            flags.push("regime".to_string());
        }
        let quad_gap = reference_quadrature_gap(&cell.evaluator, &cfg, opts.seed)?;
        if error > opts.error_floor
            && steps as f64 * quad_gap > opts.tolerances.quadrature_contamination * error
        {
            flags.push("quadrature_contamination".to_string());
        }

        rows.push(ReportRow {
            study_kind: grid.kind,
            n,
            d: grid.d,
            dt,
            m: quadrature_points_of(&cfg),
            t_total: grid.t_total,
            error,
            alpha_sup: Some(alpha.sup),
            beta_sup: None,
            bound_rhs: Some(bound),
            slack: Some(bound - error),
            wall_time_s: cell_start.elapsed().as_secs_f64(),
            flags,
        });
    }

    let max = rows.iter().map(|r| r.error).fold(0.0, f64::max);
    let min = rows.iter().map(|r| r.error).fold(f64::INFINITY, f64::min);
    let degenerate = max <= DEGENERACY_FLOOR;
    let ratio = if degenerate { 1.0 } else { max / min.max(f64::MIN_POSITIVE) };
    if degenerate {
        for r in &mut rows {
            r.flags.push("degenerate".to_string());
        }
    }

    sort_rows(&mut rows);
    Ok(ConvergenceReport {
        kind: grid.kind,
        rows,
        fits: Vec::new(),
        uniformity_ratio: Some(ratio),
        c_spread: None,
        violations: Vec::new(),
        metadata: metadata(grid, opts, started),
    })
}

/// Single-step error of the left-Riemann exponent against the reference, as
/// a function of the node count M, with the per-step quadrature bound.
pub fn run_quadrature_study(
    grid: &StudyGrid,
    opts: &StudyOptions,
) -> Result<ConvergenceReport, StudyError> {
    expect_kind(grid, StudyKind::Quadrature)?;
    if grid.n_list.len() != 1 || grid.dt_list.len() != 1 {
        return Err(StudyError::BadDtList { min: 1 });
    }
    let started = Instant::now();
    let n = grid.n_list[0];
    let dt = grid.dt_list[0];
    let cell = Cell::build(grid, n)?;
    let reference_cfg = grid.m_policy.step_config(dt)?;
    let u_ref = magnus_step_fourier(&cell.evaluator, 0.0, &reference_cfg)?;

    let dh_norm = op_norm(&cell.evaluator.derivative_fourier(0.0)?, opts.seed)?;
    let h_norm = cell.evaluator.hamiltonian_ref().b_norm();

    let m_list: Vec<usize> = if grid.m_list.is_empty() {
        vec![16, 32, 64, 128, 256]
    } else {
        grid.m_list.clone()
    };

    let mut rows = Vec::new();
    let mut points = Vec::new();
    let mut violations = Vec::new();
    for &m in &m_list {
        let cell_start = Instant::now();
        let cfg = MagnusStepConfig::left_riemann(dt, m)?;
        let u = magnus_step_fourier(&cell.evaluator, 0.0, &cfg)?;
        let error = op_norm(&u.sub(&u_ref)?, opts.seed)?;
        let bound =
            dt * dt / m as f64 * dh_norm + 3.0 * dt.powi(3) / m as f64 * h_norm * dh_norm;
        let mut flags = Vec::new();
        if error > bound + opts.tolerances.theorem1_slack {
            flags.push("quad_bound_violation".to_string());
            violations.push(format!(
                "quadrature bound violated at N={n}, dt={dt}, M={m}: error {error:.6e} > bound {bound:.6e}"
            ));
        }
        points.push((m as f64, error));
        rows.push(ReportRow {
            study_kind: grid.kind,
            n,
            d: grid.d,
            dt,
            m,
            t_total: grid.t_total,
            error,
            alpha_sup: None,
            beta_sup: None,
            bound_rhs: Some(bound),
            slack: Some(bound - error),
            wall_time_s: cell_start.elapsed().as_secs_f64(),
            flags,
        });
    }

    let fits = vec![make_fit(n, "m", &points, opts.error_floor)];
    sort_rows(&mut rows);
    Ok(ConvergenceReport {
        kind: grid.kind,
        rows,
        fits,
        uniformity_ratio: None,
        c_spread: None,
        violations,
        metadata: metadata(grid, opts, started),
    })
}

/// Single-step bound check: error against the exact propagator must stay
/// within the two-term commutator bound on every cell.
pub fn run_theorem1_check(
    grid: &StudyGrid,
    opts: &StudyOptions,
) -> Result<ConvergenceReport, StudyError> {
    expect_kind(grid, StudyKind::Theorem1Check)?;
    if !matches!(grid.m_policy, MPolicy::Reference(_) | MPolicy::Exact) {
        return Err(StudyError::WrongStudyKind {
            expected: "theorem1 check needs reference or exact M policy".into(),
            found: grid.m_policy.describe(),
        });
    }
    let started = Instant::now();
    let mut rows = Vec::new();
    let mut fits = Vec::new();
    let mut violations = Vec::new();

    for &n in &grid.n_list {
        let cell = Cell::build(grid, n)?;
        let exact = ExactPropagator::new(cell.evaluator.hamiltonian_ref())?;
        let mut err_points = Vec::new();
        let mut bound_points = Vec::new();

        for &dt in &grid.dt_list {
            let cell_start = Instant::now();
            let cfg = grid.m_policy.step_config(dt)?;
            let u = magnus_step_fourier(&cell.evaluator, 0.0, &cfg)?;
            let u_exact = exact.between_fourier(dt, 0.0);
            let error = op_norm(&u.sub(&u_exact)?, opts.seed)?;

            let scans = cell.scan_opts(opts);
            let alpha = alpha_window_scan(&cell.evaluator, dt, &scans)?;
            let beta = scan_beta(&cell.evaluator, 0.0, dt, &scans)?;
            let bound = BOUND_THIRD_ORDER_COEFF * dt.powi(3) * alpha.sup
                + BOUND_FOURTH_ORDER_COEFF * dt.powi(4) * beta.sup;

            let mut flags = Vec::new();
            if error > bound + opts.tolerances.theorem1_slack {
                flags.push("bound_violation".to_string());
                violations.push(format!(
                    "per-step bound violated at N={n}, dt={dt}: error {error:.6e} > bound {bound:.6e}"
                ));
            }
            err_points.push((dt, error));
            bound_points.push((dt, bound));
            rows.push(ReportRow {
                study_kind: grid.kind,
                n,
                d: grid.d,
                dt,
                m: quadrature_points_of(&cfg),
                t_total: dt,
                error,
                alpha_sup: Some(alpha.sup),
                beta_sup: Some(beta.sup),
                bound_rhs: Some(bound),
                slack: Some(bound - error),
                wall_time_s: cell_start.elapsed().as_secs_f64(),
                flags,
            });
        }
        fits.push(make_fit(n, "dt", &err_points, opts.error_floor));
        fits.push(make_fit(n, "bound_vs_dt", &bound_points, opts.error_floor));
    }

    sort_rows(&mut rows);
    Ok(ConvergenceReport {
        kind: grid.kind,
        rows,
        fits,
        uniformity_ratio: None,
        c_spread: None,
        violations,
        metadata: metadata(grid, opts, started),
    })
}

/// Window scaling of the two-axis commutator supremum: per-N slopes of the
/// supremum against dt and the spread of the implied constant across N.
pub fn run_theorem3_scan(
    grid: &StudyGrid,
    opts: &StudyOptions,
) -> Result<ConvergenceReport, StudyError> {
    expect_kind(grid, StudyKind::Theorem3Scan)?;
    validate_dt_list(&grid.dt_list, 2)?;
    let started = Instant::now();
    let mut rows = Vec::new();
    let mut fits = Vec::new();
    let mut c_by_dt: std::collections::BTreeMap<u64, Vec<f64>> = std::collections::BTreeMap::new();

    for &n in &grid.n_list {
        let cell = Cell::build(grid, n)?;
        let scans = cell.scan_opts(opts);
        let cell_start = Instant::now();
        let scan_rows = superconvergence_constant(&cell.evaluator, &grid.dt_list, &scans)?;
        let elapsed = cell_start.elapsed().as_secs_f64() / scan_rows.len().max(1) as f64;
        let mut points = Vec::new();
        for r in &scan_rows {
            let mut flags = Vec::new();
            if r.regime_violation {
                flags.push("regime".to_string());
            }
            points.push((r.dt, r.sup_norm));
            c_by_dt.entry(r.dt.to_bits()).or_default().push(r.c_hat);
            rows.push(ReportRow {
                study_kind: grid.kind,
                n,
                d: grid.d,
                dt: r.dt,
                m: 0,
                t_total: grid.t_total,
                error: r.sup_norm,
                alpha_sup: Some(r.sup_norm),
                beta_sup: None,
                bound_rhs: None,
                slack: None,
                wall_time_s: elapsed,
                flags,
            });
        }
        fits.push(make_fit(n, "dt", &points, opts.error_floor));
    }

    let c_spread = c_by_dt
        .values()
        .filter(|v| v.len() > 1 && v.iter().all(|c| *c > 0.0))
        .map(|v| {
            let max = v.iter().copied().fold(0.0, f64::max);
            let min = v.iter().copied().fold(f64::INFINITY, f64::min);
            max / min
        })
        .fold(None, |acc: Option<f64>, r| Some(acc.map_or(r, |a| a.max(r))));

    sort_rows(&mut rows);
    Ok(ConvergenceReport {
        kind: grid.kind,
        rows,
        fits,
        uniformity_ratio: None,
        c_spread,
        violations: Vec::new(),
        metadata: metadata(grid, opts, started),
    })
}

/// Balance estimate of the quadrature point count for a long-time run,
/// from measured norms of one build.
pub fn recommend_m_for_grid(
    grid: &StudyGrid,
    n: usize,
    dt: f64,
    opts: &StudyOptions,
) -> Result<crate::magnus::QuadratureRecommendation, StudyError> {
    let cell = Cell::build(grid, n)?;
    let scans = cell.scan_opts(opts);
    let alpha_scan = alpha_window_scan(&cell.evaluator, dt, &scans)?;
    let (steps, dt) = steps_for(grid.t_total, dt)?;
    let alpha_comm_sum = steps as f64 * alpha_scan.sup;
    let dh_norm = op_norm(&cell.evaluator.derivative_fourier(0.0)?, opts.seed)?;
    let alpha = cell.evaluator.hamiltonian_ref().b_norm();
    Ok(recommended_quadrature_points(
        grid.t_total,
        dt,
        alpha,
        alpha_comm_sum,
        dh_norm,
    )?)
}

fn make_fit(n: usize, axis: &'static str, points: &[(f64, f64)], floor: f64) -> OrderFit {
    if points.iter().all(|&(_, e)| e <= DEGENERACY_FLOOR) {
        return OrderFit {
            n,
            axis,
            slope: None,
            intercept: None,
            max_residual: None,
            points_used: 0,
            points_floored: points.len(),
            degenerate: true,
        };
    }
    match fit_order_with_floor(points, floor) {
        Ok(core) => OrderFit {
            n,
            axis,
            slope: Some(core.slope),
            intercept: Some(core.intercept),
            max_residual: Some(core.max_residual),
            points_used: core.points_used,
            points_floored: core.points_floored,
            degenerate: false,
        },
        Err(_) => OrderFit {
            n,
            axis,
            slope: None,
            intercept: None,
            max_residual: None,
            points_used: 0,
            points_floored: points.len(),
            degenerate: true,
        },
    }
}

fn quadrature_points_of(cfg: &MagnusStepConfig) -> usize {
    match cfg.rule {
        QuadratureRule::Exact => 0,
        _ => cfg.quadrature_points,
    }
}

fn expect_kind(grid: &StudyGrid, kind: StudyKind) -> Result<(), StudyError> {
    if grid.kind != kind {
        return Err(StudyError::WrongStudyKind {
            expected: kind.as_str().to_string(),
            found: grid.kind.as_str().to_string(),
        });
    }
    Ok(())
}
