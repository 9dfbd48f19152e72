//! Spectral norm (largest singular value) of dense complex matrices.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::LinalgError;
use crate::linalg::eigen::hermitian_eig;
use crate::linalg::matrix::ComplexMatrix;

/// Default seed of the power-iteration start vector. Fixed so repeated runs
/// produce identical report bytes; studies may derive their own from the
/// config seed.
pub const POWER_ITERATION_SEED: u64 = 0x517e_c7a1_0b5e_ed01;

/// Relative residual at which power iteration stops.
pub const POWER_ITERATION_TOLERANCE: f64 = 1e-8;

/// Iteration cap before power iteration reports failure.
pub const POWER_ITERATION_CAP: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum NormMethod {
    ExactSvd,
    PowerIteration,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectralNormEstimate {
    pub value: f64,
    pub method: NormMethod,
    pub iterations: usize,
    pub residual: f64,
}

/// Spectral norm by the requested method.
///
/// `exact_svd` takes the square root of the largest eigenvalue of `m†m`.
/// `power_iteration` iterates `m†m` from a seeded random start and stops when
/// the relative eigen-residual drops below [`POWER_ITERATION_TOLERANCE`];
/// hitting the cap returns [`LinalgError::ConvergenceFailure`] so callers can
/// fall back to the exact route.
pub fn spectral_norm(
    m: &ComplexMatrix,
    method: NormMethod,
) -> Result<SpectralNormEstimate, LinalgError> {
    spectral_norm_seeded(m, method, POWER_ITERATION_SEED)
}

pub fn spectral_norm_seeded(
    m: &ComplexMatrix,
    method: NormMethod,
    seed: u64,
) -> Result<SpectralNormEstimate, LinalgError> {
    if !m.all_finite() {
        return Err(LinalgError::NonFinite);
    }
    match method {
        NormMethod::ExactSvd => exact_svd_norm(m),
        NormMethod::PowerIteration => power_iteration_norm(m, seed),
    }
}

/// Power iteration with automatic fall back to the exact route when the
/// iteration stalls (e.g. nearly degenerate top singular pair).
pub fn spectral_norm_auto(m: &ComplexMatrix, seed: u64) -> Result<SpectralNormEstimate, LinalgError> {
    match spectral_norm_seeded(m, NormMethod::PowerIteration, seed) {
        Ok(est) => Ok(est),
        Err(LinalgError::ConvergenceFailure { .. }) => exact_svd_norm(m),
        Err(e) => Err(e),
    }
}

fn exact_svd_norm(m: &ComplexMatrix) -> Result<SpectralNormEstimate, LinalgError> {
    let gram = gram_matrix(m);
    let eig = hermitian_eig(&gram)?;
    let lam_max = eig.eigenvalues.last().copied().unwrap_or(0.0).max(0.0);
    Ok(SpectralNormEstimate {
        value: lam_max.sqrt(),
        method: NormMethod::ExactSvd,
        iterations: 0,
        residual: 0.0,
    })
}

fn power_iteration_norm(m: &ComplexMatrix, seed: u64) -> Result<SpectralNormEstimate, LinalgError> {
    let n = m.cols();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<Complex64> = (0..n)
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    normalize(&mut v);

    let mut lambda = 0.0f64;
    // Residual check every few iterations; each check costs one extra apply.
    const CHECK_EVERY: usize = 4;
    for iter in 1..=POWER_ITERATION_CAP {
        let w = apply_gram(m, &v);
        let norm_w = vec_norm(&w);
        if norm_w == 0.0 {
            // m†m v = 0 for a random start: the matrix is (numerically) zero.
            return Ok(SpectralNormEstimate {
                value: 0.0,
                method: NormMethod::PowerIteration,
                iterations: iter,
                residual: 0.0,
            });
        }
        // Rayleigh quotient with the normalized previous iterate.
        lambda = w.iter().zip(&v).map(|(wi, vi)| (wi * vi.conj()).re).sum();
        v = w;
        let scale = 1.0 / norm_w;
        for z in v.iter_mut() {
            *z *= scale;
        }
        if iter % CHECK_EVERY == 0 || iter == POWER_ITERATION_CAP {
            let gv = apply_gram(m, &v);
            lambda = gv.iter().zip(&v).map(|(wi, vi)| (wi * vi.conj()).re).sum();
            let residual = eigen_residual(&gv, &v, lambda);
            if residual <= POWER_ITERATION_TOLERANCE {
                return Ok(SpectralNormEstimate {
                    value: lambda.max(0.0).sqrt(),
                    method: NormMethod::PowerIteration,
                    iterations: iter,
                    residual,
                });
            }
            if iter == POWER_ITERATION_CAP {
                return Err(LinalgError::ConvergenceFailure {
                    iterations: iter,
                    residual,
                });
            }
        }
    }
    Err(LinalgError::ConvergenceFailure {
        iterations: POWER_ITERATION_CAP,
        residual: lambda,
    })
}

/// `m† (m v)` without forming the Gram matrix.
fn apply_gram(m: &ComplexMatrix, v: &[Complex64]) -> Vec<Complex64> {
    let mv = m.matvec(v);
    m.adjoint_matvec(&mv)
}

fn gram_matrix(m: &ComplexMatrix) -> ComplexMatrix {
    m.adjoint().mul(m).expect("shapes agree")
}

fn eigen_residual(gv: &[Complex64], v: &[Complex64], lambda: f64) -> f64 {
    let mut num = 0.0;
    for (g, x) in gv.iter().zip(v) {
        num += (g - x * lambda).norm_sqr();
    }
    let scale = lambda.abs().max(f64::MIN_POSITIVE);
    num.sqrt() / scale
}

fn vec_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn normalize(v: &mut [Complex64]) {
    let n = vec_norm(v);
    if n > 0.0 {
        for z in v.iter_mut() {
            *z /= n;
        }
    }
}
