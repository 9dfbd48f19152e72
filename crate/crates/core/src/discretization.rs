//! Periodic finite-difference discretization of `-(1/2)Δ + V(x)`.
//!
//! The kinetic operator is the second-difference circulant with prefactor
//! `N²/(2(b-a)²)` per axis (Kronecker sum across axes); the potential is the
//! diagonal of samples `V(x_j)`. Grid nodes are `x_j = a + (b-a) j / N` with
//! periodic identification, flattened lexicographically with the first axis
//! fastest.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::GridError;
use crate::linalg::dft::DftPlans;
use crate::linalg::matrix::ComplexMatrix;

/// Largest total dimension `N^d` at which dense matrices are materialized.
pub const DENSE_CAP: usize = 4096;

/// Evenly spaced periodic grid on `(a, b)^d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpatialGrid {
    d: usize,
    points_per_dim: usize,
    a: f64,
    b: f64,
}

impl SpatialGrid {
    pub fn new(d: usize, points_per_dim: usize, a: f64, b: f64) -> Result<Self, GridError> {
        if d == 0 {
            return Err(GridError::ZeroDimension);
        }
        if points_per_dim < 2 {
            return Err(GridError::GridTooSmall { n: points_per_dim });
        }
        if !(b > a) || !a.is_finite() || !b.is_finite() {
            return Err(GridError::InvalidInterval { a, b });
        }
        Ok(Self {
            d,
            points_per_dim,
            a,
            b,
        })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn points_per_dim(&self) -> usize {
        self.points_per_dim
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    pub fn total_dim(&self) -> usize {
        self.points_per_dim.pow(self.d as u32)
    }

    pub fn spacing(&self) -> f64 {
        (self.b - self.a) / self.points_per_dim as f64
    }

    /// Node coordinate along one axis.
    pub fn node(&self, j: usize) -> f64 {
        self.a + (self.b - self.a) * j as f64 / self.points_per_dim as f64
    }

    /// Multi-index of a flat index, first axis fastest.
    pub fn multi_index(&self, flat: usize) -> Vec<usize> {
        let mut rest = flat;
        (0..self.d)
            .map(|_| {
                let j = rest % self.points_per_dim;
                rest /= self.points_per_dim;
                j
            })
            .collect()
    }

    pub fn dft_plans(&self) -> DftPlans {
        DftPlans::new(self.points_per_dim, self.d)
    }
}

/// Potential on the grid. Built-in kinds are smooth and `(b-a)`-periodic,
/// bounded together with all derivatives; `Tabulated` carries no smoothness
/// guarantee and study reports propagate that flag.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum PotentialSpec {
    Zero,
    Constant(f64),
    /// `amplitude * sum_axis cos(2 pi k_axis (x - a) / (b - a))`.
    CosMode { k: Vec<u32>, amplitude: f64 },
    /// `amplitude * sum_axis exp(sin(2 pi (x - a) / (b - a)))`.
    ExpSin { amplitude: f64 },
    Tabulated { values: Vec<f64> },
}

impl PotentialSpec {
    pub fn cos_mode_1d(k: u32, amplitude: f64) -> Self {
        Self::CosMode {
            k: vec![k],
            amplitude,
        }
    }

    /// Smoothness is guaranteed for every built-in kind; tabulated data is
    /// taken as-is.
    pub fn is_smooth(&self) -> bool {
        !matches!(self, Self::Tabulated { .. })
    }

    pub fn describe(&self) -> String {
        match self {
            Self::Zero => "zero".to_string(),
            Self::Constant(c) => format!("constant({c})"),
            Self::CosMode { k, amplitude } => format!("cos_mode(k={k:?}, amplitude={amplitude})"),
            Self::ExpSin { amplitude } => format!("exp_sin(amplitude={amplitude})"),
            Self::Tabulated { values } => format!("tabulated({} values)", values.len()),
        }
    }
}

/// Samples the potential at every grid node in flat order.
pub fn build_potential(grid: &SpatialGrid, v: &PotentialSpec) -> Result<Vec<f64>, GridError> {
    let total = grid.total_dim();
    let (a, b) = grid.interval();
    let period = b - a;
    let samples = match v {
        PotentialSpec::Zero => vec![0.0; total],
        PotentialSpec::Constant(c) => vec![*c; total],
        PotentialSpec::CosMode { k, amplitude } => {
            let k = broadcast_per_dim(k, grid.d)?;
            (0..total)
                .map(|flat| {
                    let idx = grid.multi_index(flat);
                    amplitude
                        * idx
                            .iter()
                            .zip(&k)
                            .map(|(&j, &kj)| {
                                let x = grid.node(j);
                                (std::f64::consts::TAU * kj as f64 * (x - a) / period).cos()
                            })
                            .sum::<f64>()
                })
                .collect()
        }
        PotentialSpec::ExpSin { amplitude } => (0..total)
            .map(|flat| {
                let idx = grid.multi_index(flat);
                amplitude
                    * idx
                        .iter()
                        .map(|&j| {
                            let x = grid.node(j);
                            (std::f64::consts::TAU * (x - a) / period).sin().exp()
                        })
                        .sum::<f64>()
            })
            .collect(),
        PotentialSpec::Tabulated { values } => {
            if values.len() != total {
                return Err(GridError::TabulatedLengthMismatch {
                    expected: total,
                    found: values.len(),
                });
            }
            values.clone()
        }
    };
    if let Some(index) = samples.iter().position(|x| !x.is_finite()) {
        return Err(GridError::NonFiniteSample { index });
    }
    Ok(samples)
}

fn broadcast_per_dim(k: &[u32], d: usize) -> Result<Vec<u32>, GridError> {
    match k.len() {
        1 => Ok(vec![k[0]; d]),
        n if n == d => Ok(k.to_vec()),
        n => Err(GridError::PerDimensionLengthMismatch {
            expected: d,
            found: n,
        }),
    }
}

/// Loads a tabulated potential from a single-column CSV (one real per line).
pub fn load_tabulated_csv(path: &std::path::Path) -> Result<PotentialSpec, GridError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| GridError::TabulatedRead(format!("{}: {e}", path.display())))?;
    let mut values = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let v: f64 = trimmed.parse().map_err(|e| {
            GridError::TabulatedRead(format!("line {}: {e}", lineno + 1))
        })?;
        values.push(v);
    }
    Ok(PotentialSpec::Tabulated { values })
}

/// The discretized Hamiltonian pair `(A, B)`: kinetic spectrum in the DFT
/// basis, optional dense kinetic matrix, and the diagonal potential samples.
#[derive(Debug, Clone)]
pub struct DiscreteHamiltonian {
    grid: SpatialGrid,
    kinetic_spectrum: Vec<f64>,
    a_dense: Option<ComplexMatrix>,
    b_diag: Vec<f64>,
    kinetic_prefactor: f64,
    potential: PotentialSpec,
}

impl DiscreteHamiltonian {
    /// Builds both operators. Dense kinetic form materialized for
    /// `d <= 3` and total dimension within [`DENSE_CAP`].
    pub fn new(grid: SpatialGrid, potential: PotentialSpec) -> Result<Self, GridError> {
        let mut h = build_laplacian(&grid)?;
        h.b_diag = build_potential(&grid, &potential)?;
        h.potential = potential;
        Ok(h)
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    /// Eigenvalues of A ordered by flat DFT index, first axis fastest.
    pub fn kinetic_spectrum(&self) -> &[f64] {
        &self.kinetic_spectrum
    }

    pub fn kinetic_prefactor(&self) -> f64 {
        self.kinetic_prefactor
    }

    pub fn a_dense(&self) -> Option<&ComplexMatrix> {
        self.a_dense.as_ref()
    }

    pub fn b_diag(&self) -> &[f64] {
        &self.b_diag
    }

    pub fn potential(&self) -> &PotentialSpec {
        &self.potential
    }

    /// Operator norm of A: the largest kinetic eigenvalue (exact).
    pub fn a_norm(&self) -> f64 {
        self.kinetic_spectrum.iter().copied().fold(0.0, f64::max)
    }

    /// Operator norm of the diagonal B: the largest sample magnitude (exact).
    pub fn b_norm(&self) -> f64 {
        self.b_diag.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }

    pub fn b_dense(&self) -> ComplexMatrix {
        ComplexMatrix::from_real_diagonal(&self.b_diag)
    }
}

/// Kinetic part only: analytic DFT spectrum always, dense circulant form when
/// within the dense cap. Requires `N >= 3`; at `N = 2` the periodic stencil
/// double-counts the wraparound coupling and is rejected.
pub fn build_laplacian(grid: &SpatialGrid) -> Result<DiscreteHamiltonian, GridError> {
    let n = grid.points_per_dim();
    if n < 3 {
        return Err(GridError::GridTooSmall { n });
    }
    let (a, b) = grid.interval();
    let prefactor = (n as f64) * (n as f64) / (2.0 * (b - a) * (b - a));
    let total = grid.total_dim();

    // lambda_K = sum_axis (N^2/(b-a)^2) (1 - cos(2 pi k_axis / N)).
    let per_axis: Vec<f64> = (0..n)
        .map(|k| 2.0 * prefactor * (1.0 - (std::f64::consts::TAU * k as f64 / n as f64).cos()))
        .collect();
    let mut spectrum = vec![0.0; total];
    for (flat, slot) in spectrum.iter_mut().enumerate() {
        let idx = grid.multi_index(flat);
        *slot = idx.iter().map(|&k| per_axis[k]).sum();
    }

    let a_dense = if grid.dim() <= 3 && total <= DENSE_CAP {
        Some(dense_kronecker_laplacian(grid, prefactor))
    } else {
        None
    };

    Ok(DiscreteHamiltonian {
        grid: *grid,
        kinetic_spectrum: spectrum,
        a_dense,
        b_diag: vec![0.0; total],
        kinetic_prefactor: prefactor,
        potential: PotentialSpec::Zero,
    })
}

/// Dense Kronecker sum of the per-axis circulant stencil.
fn dense_kronecker_laplacian(grid: &SpatialGrid, prefactor: f64) -> ComplexMatrix {
    let n = grid.points_per_dim();
    let total = grid.total_dim();
    let mut out = ComplexMatrix::zeros(total, total);
    for row in 0..total {
        let idx = grid.multi_index(row);
        for axis in 0..grid.dim() {
            let stride = n.pow(axis as u32);
            let j = idx[axis];
            // Diagonal 2c, neighbors -c with periodic wrap.
            let cur = out.get(row, row);
            out.set(row, row, cur + Complex64::new(2.0 * prefactor, 0.0));
            let up = row - j * stride + ((j + 1) % n) * stride;
            let down = row - j * stride + ((j + n - 1) % n) * stride;
            let cu = out.get(row, up);
            out.set(row, up, cu + Complex64::new(-prefactor, 0.0));
            let cd = out.get(row, down);
            out.set(row, down, cd + Complex64::new(-prefactor, 0.0));
        }
    }
    out
}

/// Weyl quantization of a momentum symbol on the discrete torus (d = 1):
/// `F† diag(g(xi_k)) F` with `xi_k = 2 pi k / N`.
pub fn quantize_momentum_symbol(
    grid: &SpatialGrid,
    g: impl Fn(f64) -> f64,
) -> Result<ComplexMatrix, GridError> {
    if grid.dim() != 1 {
        return Err(GridError::UnsupportedDimension { d: grid.dim() });
    }
    let n = grid.points_per_dim();
    let diag: Vec<f64> = (0..n)
        .map(|k| g(std::f64::consts::TAU * k as f64 / n as f64))
        .collect();
    let plans = grid.dft_plans();
    let diag_m = ComplexMatrix::from_real_diagonal(&diag);
    Ok(plans.to_position_matrix(&diag_m))
}

/// Weyl quantization of a position symbol: the diagonal of potential samples.
pub fn quantize_position_symbol(
    grid: &SpatialGrid,
    v: &PotentialSpec,
) -> Result<ComplexMatrix, GridError> {
    let samples = build_potential(grid, v)?;
    Ok(ComplexMatrix::from_real_diagonal(&samples))
}
