//! Complex dense linear algebra kernels: Hermitian eigendecomposition,
//! unitary exponentials of anti-Hermitian matrices, spectral norms,
//! commutators, and unitary DFTs.
//!
//! Everything here is a pure function of its inputs; results are immutable
//! after construction and safe to share across threads.

pub mod dft;
pub mod eigen;
pub mod matrix;
pub mod norms;
pub mod unitary;

pub use dft::{dft_apply, DftPlans};
pub use eigen::{expm_antihermitian, hermitian_eig, HermitianEigen, HERMITICITY_TOLERANCE};
pub use matrix::{commutator, matmul, nested_commutator, ComplexMatrix};
pub use norms::{
    spectral_norm, spectral_norm_auto, spectral_norm_seeded, NormMethod, SpectralNormEstimate,
    POWER_ITERATION_CAP, POWER_ITERATION_SEED, POWER_ITERATION_TOLERANCE,
};
pub use unitary::{unitarity_defect, UnitaryMatrix, UNITARITY_TOLERANCE};
