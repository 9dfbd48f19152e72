//! Error types for the numerical kernels and the study harness.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("operation requires a square matrix, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not Hermitian: max symmetry defect {defect:.3e} exceeds tolerance {tolerance:.3e}")]
    NotHermitian { defect: f64, tolerance: f64 },
    #[error("matrix is not anti-Hermitian: max symmetry defect {defect:.3e} exceeds tolerance {tolerance:.3e}")]
    NotAntiHermitian { defect: f64, tolerance: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("iteration failed to converge after {iterations} iterations (residual {residual:.3e})")]
    ConvergenceFailure { iterations: usize, residual: f64 },
    #[error("unitarity defect {defect:.3e} exceeds tolerance {tolerance:.3e}")]
    UnitarityDefect { defect: f64, tolerance: f64 },
    #[error("matrix contains non-finite entries")]
    NonFinite,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("grid too small: periodic second-difference stencil needs N >= 3, got {n}")]
    GridTooSmall { n: usize },
    #[error("invalid interval: require b > a, got ({a}, {b})")]
    InvalidInterval { a: f64, b: f64 },
    #[error("dimension must be >= 1")]
    ZeroDimension,
    #[error("potential sample at flat index {index} is not finite")]
    NonFiniteSample { index: usize },
    #[error("tabulated potential has {found} values, grid needs {expected}")]
    TabulatedLengthMismatch { expected: usize, found: usize },
    #[error("torus symbol quantization is implemented for d = 1, got d = {d}")]
    UnsupportedDimension { d: usize },
    #[error("dense materialization capped at total dimension {cap}, requested {requested}")]
    DenseCapExceeded { cap: usize, requested: usize },
    #[error("per-dimension parameter list has {found} entries, grid dimension is {expected}")]
    PerDimensionLengthMismatch { expected: usize, found: usize },
    #[error("failed to read tabulated potential: {0}")]
    TabulatedRead(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MagnusError {
    #[error("step size must satisfy 0 < dt <= 1, got {dt}")]
    StepSizeOutOfRange { dt: f64 },
    #[error("quadrature point count must be >= 1")]
    ZeroQuadraturePoints,
    #[error("operation requires a dense-mode evaluator")]
    DenseModeRequired,
    #[error("quadrature-point estimate has non-positive denominator (commuting Hamiltonian family); any M >= 1 suffices")]
    NonPositiveDenominator,
    #[error("evolve requires cfg.dt = T/L, got dt {dt} for T {t_total} and L {steps}")]
    StepCountMismatch { dt: f64, t_total: f64, steps: usize },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScanError {
    #[error("scan needs at least 2 samples per axis, got {k}")]
    TooFewSamples { k: usize },
    #[error("operation requires a dense-mode evaluator")]
    DenseModeRequired,
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FitError {
    #[error("order fit needs at least 2 usable points, got {found}")]
    InsufficientPoints { found: usize },
    #[error("all {count} points lie at or below the error floor {floor:.1e}; no order can be fitted")]
    AllPointsFloored { count: usize, floor: f64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StudyError {
    #[error("study kind {found} does not match runner {expected}")]
    WrongStudyKind { expected: String, found: String },
    #[error("dt list must be strictly decreasing with at least {min} entries")]
    BadDtList { min: usize },
    #[error("N list must be non-empty")]
    EmptyNList,
    #[error("theorem bound violated at N={n}, dt={dt}: error {error:.6e} > bound {bound:.6e} + slack")]
    BoundViolation { n: usize, dt: f64, error: f64, bound: f64 },
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Magnus(#[from] MagnusError),
    #[error(transparent)]
    Scan(#[from] ScanError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Fit(#[from] FitError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ComplexityError {
    #[error("precision delta must lie in (0, 1), got {delta}")]
    DomainError { delta: f64 },
    #[error("inputs must be positive")]
    NonPositiveInput,
}
