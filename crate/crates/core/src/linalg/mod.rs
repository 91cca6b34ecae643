//! Sparse matrix assembly and symmetric positive definite linear solves.
//!
//! The discrete operators here are small-bandwidth matrices on the interior
//! lattice (the five-point Laplacian and diagonally shifted variants), so the
//! default solver is a banded Cholesky factorization. Preconditioned
//! conjugate gradients are available both as a fallback and for matrix-free
//! operators.

mod band;
mod cg;
mod csr;

pub use band::BandCholesky;
pub use cg::{conjugate_gradient, CgOutcome, LinearOperator};
pub use csr::CsrMatrix;

use thiserror::Error;

use crate::field::Grid;

/// Errors from sparse assembly and linear solves.
#[derive(Debug, Error, PartialEq)]
pub enum LinalgError {
    #[error("dimension mismatch: operator is {expected}, vector is {got}")]
    DimensionMismatch { expected: usize, got: usize },
    /// A Cholesky pivot was nonpositive or not finite.
    #[error("matrix is not positive definite (pivot {index})")]
    NotPositiveDefinite { index: usize },
    #[error("conjugate gradients stalled after {iterations} iterations (relative residual {relative_residual:.3e})")]
    CgDidNotConverge {
        iterations: usize,
        relative_residual: f64,
    },
}

/// Linear solver selection for SPD systems.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveMethod {
    DirectFactorization,
    ConjugateGradient,
}

/// Settings for [`solve_spd`].
#[derive(Clone, Debug)]
pub struct LinearSolveSettings {
    pub method: SolveMethod,
    /// Relative residual target for the CG path; must be positive.
    pub cg_tolerance: f64,
    pub cg_max_iter: usize,
}

impl Default for LinearSolveSettings {
    fn default() -> Self {
        LinearSolveSettings {
            method: SolveMethod::DirectFactorization,
            cg_tolerance: 1e-12,
            cg_max_iter: 100_000,
        }
    }
}

/// Assembles the five-point finite difference discretization of `-Laplace`
/// on the interior lattice with homogeneous Dirichlet boundary conditions:
/// diagonal `4/h^2`, lattice neighbors `-1/h^2`. The result is symmetric
/// positive definite.
pub fn assemble_laplacian(grid: Grid) -> CsrMatrix {
    let n = grid.n();
    let dim = grid.len();
    let h = grid.h();
    let diag = 4.0 / (h * h);
    let off = -1.0 / (h * h);

    let mut row_ptr = Vec::with_capacity(dim + 1);
    let mut col_idx = Vec::with_capacity(5 * dim);
    let mut values = Vec::with_capacity(5 * dim);
    row_ptr.push(0);
    for i in 0..n {
        for j in 0..n {
            let k = i * n + j;
            if i > 0 {
                col_idx.push(k - n);
                values.push(off);
            }
            if j > 0 {
                col_idx.push(k - 1);
                values.push(off);
            }
            col_idx.push(k);
            values.push(diag);
            if j + 1 < n {
                col_idx.push(k + 1);
                values.push(off);
            }
            if i + 1 < n {
                col_idx.push(k + n);
                values.push(off);
            }
            row_ptr.push(col_idx.len());
        }
    }
    CsrMatrix::from_raw(dim, row_ptr, col_idx, values)
}

/// Solves `A x = rhs` for symmetric positive definite `A`.
///
/// The direct path factors the band; the CG path runs Jacobi-preconditioned
/// conjugate gradients to `cg_tolerance` relative residual and reports
/// non-convergence as an error carrying the final residual.
pub fn solve_spd(
    a: &CsrMatrix,
    rhs: &[f64],
    settings: &LinearSolveSettings,
) -> Result<Vec<f64>, LinalgError> {
    if rhs.len() != a.dim() {
        return Err(LinalgError::DimensionMismatch {
            expected: a.dim(),
            got: rhs.len(),
        });
    }
    match settings.method {
        SolveMethod::DirectFactorization => Ok(BandCholesky::factor(a)?.solve(rhs)),
        SolveMethod::ConjugateGradient => {
            let diag = a.diagonal();
            let outcome = conjugate_gradient(
                a,
                rhs,
                settings.cg_tolerance,
                settings.cg_max_iter,
                Some(&diag),
            );
            if !outcome.converged {
                return Err(LinalgError::CgDidNotConverge {
                    iterations: outcome.iterations,
                    relative_residual: outcome.relative_residual,
                });
            }
            Ok(outcome.x)
        }
    }
}
