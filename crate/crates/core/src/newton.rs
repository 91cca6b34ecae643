//! Semismooth Newton method with line search for the augmented Lagrangian
//! subproblems.
//!
//! The subproblem objective is smooth except for the positive-part kink in
//! the penalty term. The generalized derivative picks the active set
//! `{w + rho g(x) > 0}`; components exactly at the kink count as inactive.
//! Each step solves an SPD system, either assembled (banded Cholesky with an
//! escalating diagonal shift on breakdown) or matrix-free (conjugate
//! gradients, where a truncated iterate is still a descent direction), and
//! is globalized by Armijo backtracking on the subproblem objective.

use crate::field::Field;
use crate::linalg::{conjugate_gradient, BandCholesky, CsrMatrix, LinalgError, LinearOperator};
use crate::problems::{Problem, ProblemError};

/// Parameters of the inner Newton solver. The inner tolerance is the
/// infinity norm of the subproblem gradient.
#[derive(Clone, Debug)]
pub struct NewtonSettings {
    pub tol_inf: f64,
    pub max_iter: usize,
    pub armijo_sigma: f64,
    pub backtrack_factor: f64,
    pub min_step: f64,
    /// Initial diagonal shift; escalated by factors of 10 up to `1e-2` when
    /// a factorization breaks down.
    pub regularization_shift: f64,
}

impl Default for NewtonSettings {
    fn default() -> Self {
        NewtonSettings {
            tol_inf: 1e-6,
            max_iter: 200,
            armijo_sigma: 1e-4,
            backtrack_factor: 0.5,
            min_step: 1e-12,
            regularization_shift: 0.0,
        }
    }
}

/// The linear model of one semismooth Newton step, assembled by the problem
/// at the current iterate.
pub struct SemismoothSystem {
    /// Indicator of `{w + rho g(x) > 0}`, entries in {0, 1}.
    pub active_mask: Field,
    pub rho: f64,
    pub operator: NewtonOperator,
}

/// How the Newton matrix is represented and solved.
pub enum NewtonOperator {
    /// `hessian_base + rho * diag(active_mask)`; the case of constraint
    /// Jacobian `-I`, where the penalty curvature is a masked diagonal.
    DiagonallyPenalized { hessian_base: CsrMatrix },
    /// A fully assembled Newton matrix, penalty curvature included.
    Assembled { matrix: CsrMatrix },
    /// An SPD operator applied matrix-free and solved by CG.
    MatrixFree {
        operator: Box<dyn LinearOperator + Send + Sync>,
        cg_tolerance: f64,
        cg_max_iter: usize,
    },
}

/// Outcome of one subproblem solve. `converged` is false when the iteration
/// cap or the minimal step size was hit; `x` is then the best iterate.
#[derive(Clone, Debug)]
pub struct NewtonOutcome {
    pub x: Field,
    pub iterations: usize,
    pub converged: bool,
    pub grad_inf: f64,
}

/// Solves the Newton system for a direction `d` with `H d = -gradient`.
pub fn newton_step(
    system: &SemismoothSystem,
    gradient: &Field,
    settings: &NewtonSettings,
) -> Result<Field, LinalgError> {
    let rhs: Vec<f64> = gradient.values().iter().map(|v| -v).collect();
    let grid = gradient.grid();
    let solution = match &system.operator {
        NewtonOperator::DiagonallyPenalized { hessian_base } => {
            let penalty: Vec<f64> = system
                .active_mask
                .values()
                .iter()
                .map(|m| system.rho * m)
                .collect();
            solve_with_shift_escalation(
                hessian_base,
                Some(&penalty),
                settings.regularization_shift,
                &rhs,
            )?
        }
        NewtonOperator::Assembled { matrix } => {
            solve_with_shift_escalation(matrix, None, settings.regularization_shift, &rhs)?
        }
        NewtonOperator::MatrixFree {
            operator,
            cg_tolerance,
            cg_max_iter,
        } => {
            // A capped CG run returns a truncated direction, which is still a
            // descent direction for an SPD operator.
            conjugate_gradient(operator.as_ref(), &rhs, *cg_tolerance, *cg_max_iter, None).x
        }
    };
    Ok(Field::from_values(grid, solution).expect("direction has grid length"))
}

fn solve_with_shift_escalation(
    matrix: &CsrMatrix,
    extra_diagonal: Option<&[f64]>,
    initial_shift: f64,
    rhs: &[f64],
) -> Result<Vec<f64>, LinalgError> {
    let mut shift = initial_shift;
    loop {
        match BandCholesky::factor_with(matrix, extra_diagonal, shift) {
            Ok(factor) => return Ok(factor.solve(rhs)),
            Err(err @ LinalgError::NotPositiveDefinite { .. }) => {
                let next = if shift == 0.0 { 1e-8 } else { shift * 10.0 };
                if next > 1e-2 {
                    return Err(err);
                }
                shift = next;
            }
            Err(other) => return Err(other),
        }
    }
}

/// Minimizes `L_rho(., w)` from `x_start` until the gradient infinity norm
/// drops below `settings.tol_inf`. Iterations count accepted Newton steps.
pub fn newton_solve(
    problem: &dyn Problem,
    w: &Field,
    rho: f64,
    x_start: &Field,
    settings: &NewtonSettings,
) -> Result<NewtonOutcome, ProblemError> {
    let weight = problem.weight();
    let mut x = x_start.clone();
    let mut iterations = 0;
    loop {
        let gradient = problem.aug_lagrangian_gradient(&x, w, rho)?;
        let grad_inf = gradient.norm_inf();
        if grad_inf <= settings.tol_inf {
            return Ok(NewtonOutcome {
                x,
                iterations,
                converged: true,
                grad_inf,
            });
        }
        if iterations >= settings.max_iter {
            return Ok(NewtonOutcome {
                x,
                iterations,
                converged: false,
                grad_inf,
            });
        }

        let system = problem.hessian_operator(&x, w, rho)?;
        let mut direction = newton_step(&system, &gradient, settings)?;
        let mut slope = gradient.inner(&direction, weight)?;
        if !(slope < 0.0) {
            // Numerically non-descent direction; fall back to steepest descent.
            direction = -&gradient;
            slope = -gradient.norm2(weight).powi(2);
        }

        let value = problem.aug_lagrangian_value(&x, w, rho)?;
        let mut step = 1.0;
        loop {
            let trial = &x + &(&direction * step);
            let trial_value = problem.aug_lagrangian_value(&trial, w, rho)?;
            if trial_value <= value + settings.armijo_sigma * step * slope {
                x = trial;
                break;
            }
            step *= settings.backtrack_factor;
            if step < settings.min_step {
                return Ok(NewtonOutcome {
                    x,
                    iterations,
                    converged: false,
                    grad_inf,
                });
            }
        }
        iterations += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{Field, Grid, InnerProductWeight};
    use crate::problems::toy::PointConstrainedQuadratic;
    use crate::problems::{BratuProblem, ObstacleProblem};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn inactive_constraint_reduces_to_one_linear_step() {
        // psi = -1 keeps the penalty off near zero, so the subproblem is the
        // plain quadratic and Newton lands on its minimizer in one step.
        let grid = Grid::new(5);
        let p = ObstacleProblem::with_obstacle(grid, Field::constant(grid, -1.0)).unwrap();
        let start = Field::constant(grid, 0.3);
        let out = newton_solve(&p, &Field::zeros(grid), 1.0, &start, &NewtonSettings::default())
            .unwrap();
        assert!(out.converged);
        assert_eq!(out.iterations, 1);
        assert!(out.x.norm_inf() < 1e-12);
    }

    #[test]
    fn point_toy_subproblem_minimizer() {
        // min x^2 + 2 (1 - x)_+^2 has its minimum at x = 2/3 on the active
        // branch; Newton from zero needs at most three steps.
        let p = PointConstrainedQuadratic;
        let grid = Grid::new(1);
        let out = newton_solve(
            &p,
            &Field::zeros(grid),
            4.0,
            &Field::zeros(grid),
            &NewtonSettings::default(),
        )
        .unwrap();
        assert!(out.converged);
        assert!(out.iterations <= 3, "iterations {}", out.iterations);
        assert!((out.x.values()[0] - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn all_active_quadratic_is_solved_in_one_step() {
        // With w large every component is active and the model is exact.
        let grid = Grid::new(4);
        let p = ObstacleProblem::new(grid);
        let w = Field::constant(grid, 5.0);
        let out = newton_solve(&p, &w, 2.0, &Field::zeros(grid), &NewtonSettings::default())
            .unwrap();
        assert!(out.converged);
        assert_eq!(out.iterations, 1);
    }

    #[test]
    fn newton_direction_is_descent() {
        let grid = Grid::new(6);
        let p = ObstacleProblem::new(grid);
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..10 {
            let x = Field::from_values(
                grid,
                (0..grid.len()).map(|_| rng.random_range(-0.2..0.2)).collect(),
            )
            .unwrap();
            let w = Field::from_values(
                grid,
                (0..grid.len()).map(|_| rng.random_range(0.0..1.0)).collect(),
            )
            .unwrap();
            let rho = 10.0;
            let gradient = p.aug_lagrangian_gradient(&x, &w, rho).unwrap();
            if gradient.norm_inf() == 0.0 {
                continue;
            }
            let system = p.hessian_operator(&x, &w, rho).unwrap();
            let d = newton_step(&system, &gradient, &NewtonSettings::default()).unwrap();
            let slope = gradient.inner(&d, InnerProductWeight::MeshWeighted).unwrap();
            assert!(slope < 0.0, "slope {slope}");
        }
    }

    #[test]
    fn active_mask_agrees_with_multiplier_support() {
        let grid = Grid::new(6);
        let p = ObstacleProblem::new(grid);
        let w = Field::constant(grid, 0.2);
        let rho = 50.0;
        let out = newton_solve(&p, &w, rho, &Field::zeros(grid), &NewtonSettings::default())
            .unwrap();
        let g = p.constraint(&out.x).unwrap();
        let system = p.hessian_operator(&out.x, &w, rho).unwrap();
        for ((&m, &gi), &wi) in system
            .active_mask
            .values()
            .iter()
            .zip(g.values())
            .zip(w.values())
        {
            let shifted = wi + rho * gi;
            assert_eq!(m > 0.0, shifted > 0.0);
        }
    }

    #[test]
    fn obstacle_subproblems_terminate_finitely() {
        // Active-set behavior of the convex quadratic: well under n^2 steps
        // for every tested shift/penalty combination.
        let grid = Grid::new(8);
        let p = ObstacleProblem::new(grid);
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for rho in [1.0, 100.0, 1e4] {
            let w = Field::from_values(
                grid,
                (0..grid.len()).map(|_| rng.random_range(0.0..1.0)).collect(),
            )
            .unwrap();
            let out = newton_solve(&p, &w, rho, &Field::zeros(grid), &NewtonSettings::default())
                .unwrap();
            assert!(out.converged);
            assert!(out.iterations <= grid.len());
        }
    }

    #[test]
    fn bratu_subproblems_meet_gradient_tolerance() {
        let grid = Grid::new(16);
        let p = BratuProblem::new(grid, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for rho in [1.0, 10.0] {
            let w = Field::from_values(
                grid,
                (0..grid.len()).map(|_| rng.random_range(0.0..1.0)).collect(),
            )
            .unwrap();
            let out = newton_solve(&p, &w, rho, &Field::zeros(grid), &NewtonSettings::default())
                .unwrap();
            assert!(out.converged);
            let grad = p.aug_lagrangian_gradient(&out.x, &w, rho).unwrap();
            assert!(grad.norm_inf() <= 1e-6);
        }
    }

    #[test]
    fn subproblem_objective_decreases_monotonically() {
        let grid = Grid::new(8);
        let p = BratuProblem::new(grid, 1.0);
        let w = Field::constant(grid, 0.5);
        let rho = 10.0;
        let start = Field::constant(grid, 0.2);
        let before = p.aug_lagrangian_value(&start, &w, rho).unwrap();
        let out = newton_solve(&p, &w, rho, &start, &NewtonSettings::default()).unwrap();
        let after = p.aug_lagrangian_value(&out.x, &w, rho).unwrap();
        assert!(after <= before);
    }

    #[test]
    fn shift_escalation_recovers_mildly_indefinite_systems() {
        let system = SemismoothSystem {
            active_mask: Field::zeros(Grid::new(1)),
            rho: 1.0,
            operator: NewtonOperator::Assembled {
                matrix: CsrMatrix::from_triplets(1, &[(0, 0, -1e-3)]),
            },
        };
        let gradient = Field::from_values(Grid::new(1), vec![1.0]).unwrap();
        let d = newton_step(&system, &gradient, &NewtonSettings::default()).unwrap();
        assert!(d.values()[0].is_finite());

        let hopeless = SemismoothSystem {
            active_mask: Field::zeros(Grid::new(1)),
            rho: 1.0,
            operator: NewtonOperator::Assembled {
                matrix: CsrMatrix::from_triplets(1, &[(0, 0, -1.0)]),
            },
        };
        assert!(matches!(
            newton_step(&hopeless, &gradient, &NewtonSettings::default()),
            Err(LinalgError::NotPositiveDefinite { .. })
        ));
    }
}
