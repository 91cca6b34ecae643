//! Safeguarded augmented Lagrangian method for inequality-constrained
//! minimization over lattice fields.
//!
//! The crate is organized bottom-up:
//!
//! - [`field`]: grids, lattice fields, order operations, discrete inner
//!   products;
//! - [`linalg`]: five-point Laplacian assembly, banded Cholesky, conjugate
//!   gradients;
//! - [`newton`]: the semismooth Newton method used on the unconstrained
//!   subproblems;
//! - [`alm`]: the outer augmented Lagrangian loop with safeguarded
//!   multipliers, the conditional penalty update, and its Moreau-Yosida
//!   (pure penalty) variant;
//! - [`problems`]: the benchmark problems behind one problem contract
//!   (obstacle, obstacle-Bratu, state-constrained optimal control);
//! - [`diagnostics`]: KKT/complementarity residual measures and trace export.

pub mod alm;
pub mod diagnostics;
pub mod field;
pub mod linalg;
pub mod newton;
pub mod problems;

pub use alm::{
    solve, IterationRecord, RunInvariants, SafeguardRule, SolveReport, SolveStatus, SolverConfig,
    Variant, WMax,
};
pub use field::{Field, FieldError, Grid, InnerProductWeight};
pub use linalg::{CsrMatrix, LinalgError, LinearSolveSettings, SolveMethod};
pub use newton::{NewtonOperator, NewtonSettings, SemismoothSystem};
pub use problems::{Problem, ProblemError};
