//! Hermitian eigendecomposition and the unitary exponential built on it.
//!
//! The solver reduces a complex Hermitian matrix to real symmetric
//! tridiagonal form with Householder reflections, then runs implicit-shift
//! QL with Wilkinson shifts while accumulating the transform. Deterministic,
//! no external backend, adequate for the dense sizes this library targets.

use num_complex::Complex64;

use crate::error::LinalgError;
use crate::linalg::matrix::ComplexMatrix;
use crate::linalg::unitary::UnitaryMatrix;

/// Absolute floor of the Hermitian-symmetry tolerance; scaled by the matrix
/// magnitude for inputs with large entries.
pub const HERMITICITY_TOLERANCE: f64 = 1e-10;

const MAX_QL_SWEEPS: usize = 60;

/// Eigendecomposition of a Hermitian matrix: ascending real eigenvalues and
/// an orthonormal column basis of eigenvectors.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: ComplexMatrix,
}

impl HermitianEigen {
    /// `Q diag(lambda) Q†`, for round-trip checks.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let n = self.eigenvalues.len();
        let q = &self.eigenvectors;
        let mut scaled = q.clone();
        for i in 0..n {
            let row = scaled.row_mut(i);
            for (j, lam) in self.eigenvalues.iter().enumerate() {
                row[j] *= *lam;
            }
        }
        scaled.mul(&q.adjoint()).expect("square shapes")
    }

    /// Applies `f` to each eigenvalue and reassembles `Q f(diag) Q†`.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> Complex64) -> ComplexMatrix {
        let n = self.eigenvalues.len();
        let q = &self.eigenvectors;
        let phases: Vec<Complex64> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        let mut scaled = q.clone();
        for i in 0..n {
            let row = scaled.row_mut(i);
            for (j, p) in phases.iter().enumerate() {
                row[j] *= *p;
            }
        }
        scaled.mul(&q.adjoint()).expect("square shapes")
    }
}

/// Eigendecomposition of a Hermitian matrix.
///
/// The caller asserts Hermiticity; a symmetry defect above
/// `1e-10 * max(1, max_abs)` is rejected as [`LinalgError::NotHermitian`].
pub fn hermitian_eig(m: &ComplexMatrix) -> Result<HermitianEigen, LinalgError> {
    if !m.is_square() {
        return Err(LinalgError::NotSquare {
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    if !m.all_finite() {
        return Err(LinalgError::NonFinite);
    }
    let tolerance = HERMITICITY_TOLERANCE * 1.0f64.max(m.max_abs());
    let defect = m.hermitian_defect();
    if defect > tolerance {
        return Err(LinalgError::NotHermitian { defect, tolerance });
    }

    let n = m.rows();
    // Exactly Hermitian working copy; the reduction assumes the symmetry.
    let mut a = ComplexMatrix::from_fn(n, n, |i, j| {
        (m.get(i, j) + m.get(j, i).conj()) * 0.5
    });

    let mut q = ComplexMatrix::identity(n);
    let (mut diag, mut off) = tridiagonalize(&mut a, &mut q);
    ql_implicit(&mut diag, &mut off, &mut q)?;
    sort_ascending(&mut diag, &mut q);

    Ok(HermitianEigen {
        eigenvalues: diag,
        eigenvectors: q,
    })
}

/// Householder reduction of Hermitian `a` to real symmetric tridiagonal form.
/// Returns (diagonal, subdiagonal); the accumulated unitary lands in `q`.
fn tridiagonalize(a: &mut ComplexMatrix, q: &mut ComplexMatrix) -> (Vec<f64>, Vec<f64>) {
    let n = a.rows();
    let mut v = vec![Complex64::new(0.0, 0.0); n];
    let mut p = vec![Complex64::new(0.0, 0.0); n];
    let mut w = vec![Complex64::new(0.0, 0.0); n];

    for k in 0..n.saturating_sub(2) {
        // Column below the diagonal.
        let mut norm_sq = 0.0;
        for i in (k + 1)..n {
            norm_sq += a.get(i, k).norm_sqr();
        }
        let norm = norm_sq.sqrt();
        if norm == 0.0 {
            continue;
        }
        let x0 = a.get(k + 1, k);
        // alpha = -phase(x0) * norm, chosen to avoid cancellation.
        let alpha = if x0.norm() == 0.0 {
            Complex64::new(-norm, 0.0)
        } else {
            -x0 / x0.norm() * norm
        };

        // u = x - alpha e1, normalized into v over indices k+1..n.
        let mut u_norm_sq = 0.0;
        for i in (k + 1)..n {
            let ui = if i == k + 1 { a.get(i, k) - alpha } else { a.get(i, k) };
            v[i] = ui;
            u_norm_sq += ui.norm_sqr();
        }
        if u_norm_sq <= f64::EPSILON * norm_sq {
            continue;
        }
        let inv = 1.0 / u_norm_sq.sqrt();
        for vi in v.iter_mut().take(n).skip(k + 1) {
            *vi *= inv;
        }

        // Hermitian rank-2 update of the trailing block:
        // A <- A - v w† - w v† with p = A v, kappa = v† p, w = 2(p - kappa v).
        for i in (k + 1)..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in (k + 1)..n {
                acc += a.get(i, j) * v[j];
            }
            p[i] = acc;
        }
        let mut kappa = Complex64::new(0.0, 0.0);
        for i in (k + 1)..n {
            kappa += v[i].conj() * p[i];
        }
        for i in (k + 1)..n {
            w[i] = (p[i] - kappa * v[i]) * 2.0;
        }
        for i in (k + 1)..n {
            for j in (k + 1)..n {
                let upd = v[i] * w[j].conj() + w[i] * v[j].conj();
                a.set(i, j, a.get(i, j) - upd);
            }
        }
        // Eliminated column.
        a.set(k + 1, k, alpha);
        a.set(k, k + 1, alpha.conj());
        for i in (k + 2)..n {
            a.set(i, k, Complex64::new(0.0, 0.0));
            a.set(k, i, Complex64::new(0.0, 0.0));
        }

        // Q <- Q (I - 2 v v†), columns k+1..n only.
        for r in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in (k + 1)..n {
                acc += q.get(r, j) * v[j];
            }
            let acc2 = acc * 2.0;
            for j in (k + 1)..n {
                let cur = q.get(r, j);
                q.set(r, j, cur - acc2 * v[j].conj());
            }
        }
    }

    // Phase-rotate so the subdiagonal becomes real non-negative.
    let mut phases = vec![Complex64::new(1.0, 0.0); n];
    for k in 0..n - 1 {
        let e = a.get(k + 1, k);
        let mag = e.norm();
        phases[k + 1] = if mag == 0.0 { phases[k] } else { phases[k] * (e / mag) };
    }
    for r in 0..n {
        for k in 0..n {
            let cur = q.get(r, k);
            q.set(r, k, cur * phases[k]);
        }
    }

    let diag: Vec<f64> = (0..n).map(|i| a.get(i, i).re).collect();
    let mut off = vec![0.0; n];
    for k in 0..n - 1 {
        off[k] = a.get(k + 1, k).norm();
    }
    (diag, off)
}

/// Implicit-shift QL on a real symmetric tridiagonal, rotations accumulated
/// into the complex columns of `q`. `off[i]` couples `i` and `i+1`.
fn ql_implicit(
    diag: &mut [f64],
    off: &mut [f64],
    q: &mut ComplexMatrix,
) -> Result<(), LinalgError> {
    let n = diag.len();
    if n == 1 {
        return Ok(());
    }
    for l in 0..n {
        let mut sweeps = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = diag[m].abs() + diag[m + 1].abs();
                if off[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            sweeps += 1;
            if sweeps > MAX_QL_SWEEPS {
                return Err(LinalgError::ConvergenceFailure {
                    iterations: sweeps,
                    residual: off[l].abs(),
                });
            }
            // Wilkinson-style shift.
            let mut g = (diag[l + 1] - diag[l]) / (2.0 * off[l]);
            let mut r = g.hypot(1.0);
            let signed_r = if g >= 0.0 { r.abs() } else { -r.abs() };
            g = diag[m] - diag[l] + off[l] / (g + signed_r);

            let mut s = 1.0;
            let mut c = 1.0;
            let mut p = 0.0;
            let mut underflow = false;
            for i in (l..m).rev() {
                let f = s * off[i];
                let b = c * off[i];
                r = f.hypot(g);
                off[i + 1] = r;
                if r == 0.0 {
                    diag[i + 1] -= p;
                    off[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = diag[i + 1] - p;
                r = (diag[i] - g) * s + 2.0 * c * b;
                p = s * r;
                diag[i + 1] = g + p;
                g = c * r - b;

                for k in 0..q.rows() {
                    let fk = q.get(k, i + 1);
                    let qi = q.get(k, i);
                    q.set(k, i + 1, qi * s + fk * c);
                    q.set(k, i, qi * c - fk * s);
                }
            }
            if underflow {
                continue;
            }
            diag[l] -= p;
            off[l] = g;
            off[m] = 0.0;
        }
    }
    Ok(())
}

fn sort_ascending(values: &mut Vec<f64>, q: &mut ComplexMatrix) {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).expect("finite eigenvalues"));
    let sorted: Vec<f64> = order.iter().map(|&i| values[i]).collect();
    let mut qs = ComplexMatrix::zeros(n, n);
    for (new_col, &old_col) in order.iter().enumerate() {
        for r in 0..n {
            qs.set(r, new_col, q.get(r, old_col));
        }
    }
    *values = sorted;
    *q = qs;
}

/// Unitary exponential `exp(g)` of an anti-Hermitian `g`, via the Hermitian
/// eigendecomposition of `i g`. Unitary by construction up to roundoff.
pub fn expm_antihermitian(g: &ComplexMatrix) -> Result<UnitaryMatrix, LinalgError> {
    if !g.is_square() {
        return Err(LinalgError::NotSquare {
            rows: g.rows(),
            cols: g.cols(),
        });
    }
    let tolerance = HERMITICITY_TOLERANCE * 1.0f64.max(g.max_abs());
    let defect = g.antihermitian_defect();
    if defect > tolerance {
        return Err(LinalgError::NotAntiHermitian { defect, tolerance });
    }
    // h = i g is Hermitian and exp(g) = exp(-i h).
    let h = g.scale(Complex64::new(0.0, 1.0));
    let eig = hermitian_eig(&h)?;
    let u = eig.map_spectrum(|lam| Complex64::from_polar(1.0, -lam));
    UnitaryMatrix::new(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::matrix::matmul;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Deterministic pseudo-random Hermitian matrix.
    fn test_hermitian(n: usize, seed: u64) -> ComplexMatrix {
        let mut state = seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(1);
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let mut m = ComplexMatrix::zeros(n, n);
        for i in 0..n {
            m.set(i, i, c(next() * 2.0, 0.0));
            for j in (i + 1)..n {
                let z = c(next(), next());
                m.set(i, j, z);
                m.set(j, i, z.conj());
            }
        }
        m
    }

    #[test]
    fn diagonal_matrix_eigenvalues_sorted() {
        let m = ComplexMatrix::from_real_diagonal(&[3.0, 1.0, 2.0]);
        let eig = hermitian_eig(&m).unwrap();
        assert_eq!(eig.eigenvalues, vec![1.0, 2.0, 3.0]);
        // Eigenvector columns are signed unit vectors permuting the identity.
        for (col, &lam) in eig.eigenvalues.iter().enumerate() {
            let expected_row = [3.0, 1.0, 2.0].iter().position(|&d| d == lam).unwrap();
            for r in 0..3 {
                let mag = eig.eigenvectors.get(r, col).norm();
                if r == expected_row {
                    assert!((mag - 1.0).abs() < 1e-12);
                } else {
                    assert!(mag < 1e-12);
                }
            }
        }
    }

    #[test]
    fn pauli_x_eigenvalues() {
        let mut m = ComplexMatrix::zeros(2, 2);
        m.set(0, 1, c(1.0, 0.0));
        m.set(1, 0, c(1.0, 0.0));
        let eig = hermitian_eig(&m).unwrap();
        assert!((eig.eigenvalues[0] + 1.0).abs() < 1e-14);
        assert!((eig.eigenvalues[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_non_hermitian() {
        let mut m = ComplexMatrix::zeros(2, 2);
        m.set(0, 1, c(1.0, 0.0));
        m.set(1, 0, c(0.5, 0.0));
        assert!(matches!(
            hermitian_eig(&m),
            Err(LinalgError::NotHermitian { .. })
        ));
    }

    #[test]
    fn round_trip_and_orthonormality_random() {
        for &n in &[2usize, 3, 5, 16, 33, 64] {
            let m = test_hermitian(n, 7 + n as u64);
            let eig = hermitian_eig(&m).unwrap();
            for w in eig.eigenvalues.windows(2) {
                assert!(w[0] <= w[1]);
            }
            let qhq = matmul(&eig.eigenvectors.adjoint(), &eig.eigenvectors);
            let defect = qhq.sub(&ComplexMatrix::identity(n)).unwrap().max_abs();
            assert!(defect < 1e-10, "orthonormality defect {defect:.3e} at n={n}");
            let rec = eig.reconstruct();
            let err = rec.sub(&m).unwrap().max_abs();
            assert!(
                err <= 1e-9 * (1.0 + m.max_abs()),
                "reconstruction error {err:.3e} at n={n}"
            );
        }
    }

    #[test]
    fn residual_columnwise_random() {
        let n = 24;
        let m = test_hermitian(n, 99);
        let eig = hermitian_eig(&m).unwrap();
        let mq = matmul(&m, &eig.eigenvectors);
        let scale = m.max_abs();
        for jcol in 0..n {
            for r in 0..n {
                let resid = mq.get(r, jcol) - eig.eigenvectors.get(r, jcol) * eig.eigenvalues[jcol];
                assert!(resid.norm() <= 1e-9 * scale.max(1.0));
            }
        }
    }

    #[test]
    fn expm_of_zero_is_identity() {
        let g = ComplexMatrix::zeros(4, 4);
        let u = expm_antihermitian(&g).unwrap();
        let err = u
            .matrix()
            .sub(&ComplexMatrix::identity(4))
            .unwrap()
            .max_abs();
        assert!(err < 1e-14);
        assert!(u.unitarity_defect() < 1e-14);
    }

    #[test]
    fn expm_diagonal_phases() {
        let mut g = ComplexMatrix::zeros(2, 2);
        g.set(0, 0, c(0.0, -std::f64::consts::PI));
        let u = expm_antihermitian(&g).unwrap();
        assert!((u.matrix().get(0, 0) - c(-1.0, 0.0)).norm() < 1e-13);
        assert!((u.matrix().get(1, 1) - c(1.0, 0.0)).norm() < 1e-13);
        assert!(u.matrix().get(0, 1).norm() < 1e-13);
    }

    /// Scaling-and-squaring Taylor exponential, used only as a test oracle.
    fn expm_taylor_oracle(g: &ComplexMatrix) -> ComplexMatrix {
        let n = g.rows();
        let norm = g.max_abs() * n as f64;
        let squarings = if norm > 0.25 {
            (norm / 0.25).log2().ceil() as u32
        } else {
            0
        };
        let scaled = g.scale(c(1.0 / f64::powi(2.0, squarings as i32), 0.0));
        let mut term = ComplexMatrix::identity(n);
        let mut sum = ComplexMatrix::identity(n);
        for k in 1..=24 {
            term = matmul(&term, &scaled).scale(c(1.0 / k as f64, 0.0));
            sum = sum.add(&term).unwrap();
        }
        for _ in 0..squarings {
            sum = matmul(&sum, &sum);
        }
        sum
    }

    #[test]
    fn expm_matches_scaling_and_squaring_oracle() {
        let n = 8;
        let h = test_hermitian(n, 3);
        let g = h.scale(c(0.0, -0.35));
        let u = expm_antihermitian(&g).unwrap();
        let oracle = expm_taylor_oracle(&g);
        let err = u.matrix().sub(&oracle).unwrap().max_abs();
        assert!(err < 1e-11, "expm disagrees with oracle: {err:.3e}");
    }

    #[test]
    fn expm_inverse_property_random() {
        for &n in &[4usize, 16, 64] {
            let h = test_hermitian(n, 11 + n as u64);
            let g = h.scale(c(0.0, -1.0));
            let u = expm_antihermitian(&g).unwrap();
            let v = expm_antihermitian(&g.scale(c(-1.0, 0.0))).unwrap();
            let prod = matmul(u.matrix(), v.matrix());
            let err = prod.sub(&ComplexMatrix::identity(n)).unwrap().max_abs();
            assert!(err < 1e-10, "u exp(-g) exp(g) defect {err:.3e} at n={n}");
        }
    }
}
