//! Unitary matrices with a verified unitarity defect.

use crate::error::LinalgError;
use crate::linalg::matrix::{matmul, ComplexMatrix};

/// Largest acceptable `max |U†U - I|` for a constructed unitary.
pub const UNITARITY_TOLERANCE: f64 = 1e-9;

/// Dense unitary with its unitarity defect `max |U†U - I|` computed on
/// construction and required to be at most [`UNITARITY_TOLERANCE`].
#[derive(Debug, Clone)]
pub struct UnitaryMatrix {
    matrix: ComplexMatrix,
    unitarity_defect: f64,
}

impl UnitaryMatrix {
    pub fn new(matrix: ComplexMatrix) -> Result<Self, LinalgError> {
        if !matrix.is_square() {
            return Err(LinalgError::NotSquare {
                rows: matrix.rows(),
                cols: matrix.cols(),
            });
        }
        if !matrix.all_finite() {
            return Err(LinalgError::NonFinite);
        }
        let defect = unitarity_defect(&matrix);
        if defect > UNITARITY_TOLERANCE {
            return Err(LinalgError::UnitarityDefect {
                defect,
                tolerance: UNITARITY_TOLERANCE,
            });
        }
        Ok(Self {
            matrix,
            unitarity_defect: defect,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            matrix: ComplexMatrix::identity(n),
            unitarity_defect: 0.0,
        }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn unitarity_defect(&self) -> f64 {
        self.unitarity_defect
    }

    /// Product `self * rhs` (also unitary; defect re-verified).
    pub fn compose(&self, rhs: &UnitaryMatrix) -> Result<UnitaryMatrix, LinalgError> {
        if self.dim() != rhs.dim() {
            return Err(LinalgError::DimensionMismatch {
                expected: self.dim(),
                found: rhs.dim(),
            });
        }
        UnitaryMatrix::new(matmul(&self.matrix, &rhs.matrix))
    }
}

/// `max |U†U - I|`.
pub fn unitarity_defect(u: &ComplexMatrix) -> f64 {
    let gram = matmul(&u.adjoint(), u);
    let n = u.rows();
    let mut defect: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let expected = if i == j { 1.0 } else { 0.0 };
            let d = gram.get(i, j) - num_complex::Complex64::new(expected, 0.0);
            defect = defect.max(d.norm());
        }
    }
    defect
}
