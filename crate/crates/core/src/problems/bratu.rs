//! The obstacle Bratu problem: the obstacle problem with an exponential
//! term added to the objective, which makes it non-quadratic and nonconvex.
//!
//! `f(u) = ||grad u||^2 - alpha * integral of exp(-u)`, quadrature by the
//! midpoint rule on the interior points. The Hessian `2A - alpha
//! diag(exp(-u))` can in principle lose definiteness; the Newton solver's
//! shift regularization covers that case.

use std::sync::atomic::{AtomicU64, Ordering};

use super::{active_mask, Problem, ProblemError};
use crate::field::{Field, FieldError, Grid};
use crate::linalg::{assemble_laplacian, CsrMatrix};
use crate::newton::{NewtonOperator, SemismoothSystem};

/// Exponent magnitude above which `exp` is evaluated in clamped form.
const EXP_CLAMP: f64 = 700.0;

pub struct BratuProblem {
    grid: Grid,
    psi: Field,
    alpha: f64,
    /// `2A`, the quadratic part of the Hessian.
    hessian2a: CsrMatrix,
    clamp_events: AtomicU64,
}

impl BratuProblem {
    /// The benchmark configuration: the default obstacle and the given
    /// `alpha > 0`.
    pub fn new(grid: Grid, alpha: f64) -> Self {
        Self::with_obstacle(grid, super::default_obstacle(grid), alpha)
            .expect("obstacle built on grid")
    }

    pub fn with_obstacle(grid: Grid, psi: Field, alpha: f64) -> Result<Self, ProblemError> {
        assert!(alpha > 0.0, "alpha must be positive");
        if psi.grid() != grid {
            return Err(FieldError::GridMismatch {
                left: grid.n(),
                right: psi.grid().n(),
            }
            .into());
        }
        Ok(BratuProblem {
            grid,
            psi,
            alpha,
            hessian2a: assemble_laplacian(grid).scale(2.0),
            clamp_events: AtomicU64::new(0),
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn obstacle(&self) -> &Field {
        &self.psi
    }

    /// Number of evaluations where an exponent had to be clamped to avoid
    /// overflow.
    pub fn clamp_events(&self) -> u64 {
        self.clamp_events.load(Ordering::Relaxed)
    }

    /// `exp(-u)` componentwise, clamping exponents beyond `700` and
    /// flagging the event.
    fn exp_neg(&self, u: &Field) -> Field {
        let mut clamped = false;
        let out = u.map(|v| {
            let e = -v;
            if e > EXP_CLAMP {
                clamped = true;
                EXP_CLAMP.exp()
            } else {
                e.exp()
            }
        });
        if clamped {
            self.clamp_events.fetch_add(1, Ordering::Relaxed);
        }
        out
    }
}

impl Problem for BratuProblem {
    fn grid(&self) -> Grid {
        self.grid
    }

    fn objective(&self, x: &Field) -> Result<f64, ProblemError> {
        let hx = Field::from_values(self.grid, self.hessian2a.apply(x.values())?)?;
        let quad = 0.5 * hx.inner(x, self.weight())?;
        let h2 = self.grid.h() * self.grid.h();
        let integral: f64 = self.exp_neg(x).values().iter().sum::<f64>() * h2;
        Ok(quad - self.alpha * integral)
    }

    fn objective_gradient(&self, x: &Field) -> Result<Field, ProblemError> {
        let hx = Field::from_values(self.grid, self.hessian2a.apply(x.values())?)?;
        Ok(&hx + &(&self.exp_neg(x) * self.alpha))
    }

    fn constraint(&self, x: &Field) -> Result<Field, ProblemError> {
        Ok(&self.psi - x)
    }

    fn constraint_adjoint_apply(&self, _x: &Field, mu: &Field) -> Result<Field, ProblemError> {
        Ok(-mu)
    }

    fn hessian_operator(
        &self,
        x: &Field,
        w: &Field,
        rho: f64,
    ) -> Result<SemismoothSystem, ProblemError> {
        let g = self.constraint(x)?;
        let exp_term = &self.exp_neg(x) * (-self.alpha);
        let base = self.hessian2a.add_diagonal(exp_term.values())?;
        Ok(SemismoothSystem {
            active_mask: active_mask(&g, w, rho),
            rho,
            operator: NewtonOperator::DiagonallyPenalized { hessian_base: base },
        })
    }
}
