//! The benchmark problems behind one problem contract.
//!
//! A [`Problem`] supplies the objective, its gradient, the constraint
//! `g(x) <= 0`, the adjoint action of the constraint Jacobian, and a
//! Hessian-like operator for the semismooth Newton subproblem solver. The
//! augmented Lagrangian itself is a provided method so that problems with an
//! expensive composite structure (the control problem) can fuse its pieces.

mod bratu;
mod control;
mod obstacle;
pub mod toy;

pub use bratu::BratuProblem;
pub use control::{default_state_bound, default_target, ControlProblem};
pub use obstacle::{default_obstacle, ObstacleProblem};

use thiserror::Error;

use crate::field::{Field, FieldError, Grid, InnerProductWeight};
use crate::linalg::LinalgError;
use crate::newton::SemismoothSystem;

/// Errors from problem evaluations.
#[derive(Debug, Error)]
pub enum ProblemError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    /// The damped Newton iteration on the state equation stopped making
    /// progress; for a monotone nonlinearity this indicates a bug or an
    /// unreasonable tolerance.
    #[error("state equation solver stagnated (residual {residual:.3e})")]
    StateSolverStagnated { residual: f64 },
}

/// Contract fulfilled by each benchmark problem.
///
/// `constraint` returns `g(x)`; `g(x) <= 0` componentwise means feasible.
/// Gradients are representatives with respect to the problem's inner
/// product weight, so the same formulas serve both weighted and unweighted
/// problems.
pub trait Problem {
    fn grid(&self) -> Grid;

    /// Weight of the discrete inner product the problem is posed in.
    fn weight(&self) -> InnerProductWeight {
        InnerProductWeight::MeshWeighted
    }

    fn objective(&self, x: &Field) -> Result<f64, ProblemError>;

    fn objective_gradient(&self, x: &Field) -> Result<Field, ProblemError>;

    fn constraint(&self, x: &Field) -> Result<Field, ProblemError>;

    /// Applies the adjoint of the constraint Jacobian, `g'(x)* mu`; linear
    /// in `mu`.
    fn constraint_adjoint_apply(&self, x: &Field, mu: &Field) -> Result<Field, ProblemError>;

    /// Assembles the Newton model at `x` for the subproblem with shift `w`
    /// and penalty `rho`.
    fn hessian_operator(
        &self,
        x: &Field,
        w: &Field,
        rho: f64,
    ) -> Result<SemismoothSystem, ProblemError>;

    /// `L_rho(x, w) = f(x) + rho/2 ||(g(x) + w/rho)_+||^2` in the problem's
    /// weighting.
    fn aug_lagrangian_value(&self, x: &Field, w: &Field, rho: f64) -> Result<f64, ProblemError> {
        debug_assert!(rho > 0.0, "penalty parameter must be positive");
        let g = self.constraint(x)?;
        let shifted = &g + &(w * (1.0 / rho));
        let penalty = shifted.positive_part().norm2(self.weight());
        Ok(self.objective(x)? + 0.5 * rho * penalty * penalty)
    }

    /// `grad f(x) + g'(x)* (w + rho g(x))_+`, the subproblem gradient. Well
    /// defined also at `rho = 0`, where the penalty contribution is
    /// `g'(x)* w_+`.
    fn aug_lagrangian_gradient(
        &self,
        x: &Field,
        w: &Field,
        rho: f64,
    ) -> Result<Field, ProblemError> {
        let g = self.constraint(x)?;
        let shifted_multiplier = (&(&g * rho) + w).positive_part();
        let adjoint = self.constraint_adjoint_apply(x, &shifted_multiplier)?;
        Ok(&self.objective_gradient(x)? + &adjoint)
    }
}

/// Indicator field of `{w + rho g > 0}`.
pub(crate) fn active_mask(g: &Field, w: &Field, rho: f64) -> Field {
    let shifted = &(g * rho) + w;
    shifted.map(|v| if v > 0.0 { 1.0 } else { 0.0 })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    /// Componentwise central finite differences of the objective, returned
    /// as a representative in the problem's inner product weighting.
    pub(crate) fn objective_fd_gradient(problem: &dyn Problem, x: &Field) -> Field {
        fd_gradient(x, problem.weight(), |point| problem.objective(point).unwrap())
    }

    pub(crate) fn fd_gradient(
        x: &Field,
        weight: InnerProductWeight,
        mut value: impl FnMut(&Field) -> f64,
    ) -> Field {
        let factor = weight.factor(x.grid());
        let step = 1e-6 * (1.0 + x.norm_inf());
        let mut out = Field::zeros(x.grid());
        for i in 0..x.len() {
            let mut plus = x.clone();
            plus.values_mut()[i] += step;
            let mut minus = x.clone();
            minus.values_mut()[i] -= step;
            out.values_mut()[i] = (value(&plus) - value(&minus)) / (2.0 * step * factor);
        }
        out
    }

    pub(crate) fn check_gradient_fd(problem: &dyn Problem, x: &Field, tol: f64) {
        let grad = problem.objective_gradient(x).unwrap();
        let fd = objective_fd_gradient(problem, x);
        let err = (&grad - &fd).norm_inf();
        let scale = 1.0 + grad.norm_inf();
        assert!(
            err <= tol * scale,
            "finite difference mismatch: {err:.3e} > {tol:.1e} * {scale:.3e}"
        );
    }
}
