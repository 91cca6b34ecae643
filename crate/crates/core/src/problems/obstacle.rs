//! The obstacle problem: minimize the Dirichlet energy subject to staying
//! above an obstacle.
//!
//! The objective is `||grad u||^2 = <A u, u>` with `A` the assembled
//! negative Laplacian, the constraint is `g(u) = psi - u <= 0`, and the
//! constraint Jacobian is `-I`, so the Newton matrix is `2A` plus a masked
//! penalty diagonal. The problem is a strongly convex quadratic.

use super::{active_mask, Problem, ProblemError};
use crate::field::{Field, FieldError, Grid};
use crate::linalg::{assemble_laplacian, CsrMatrix};
use crate::newton::{NewtonOperator, SemismoothSystem};

/// The benchmark obstacle: `max{0.1 - 0.5 ||(x, y) - (0.5, 0.5)||, 0}`, a
/// cone of height 0.1 capped at zero.
pub fn default_obstacle(grid: Grid) -> Field {
    Field::from_fn(grid, |x, y| {
        let r = ((x - 0.5).powi(2) + (y - 0.5).powi(2)).sqrt();
        (0.1 - 0.5 * r).max(0.0)
    })
}

pub struct ObstacleProblem {
    grid: Grid,
    psi: Field,
    /// `2A`, the objective Hessian.
    hessian: CsrMatrix,
}

impl ObstacleProblem {
    /// The benchmark configuration with the default obstacle.
    pub fn new(grid: Grid) -> Self {
        Self::with_obstacle(grid, default_obstacle(grid)).expect("obstacle built on grid")
    }

    pub fn with_obstacle(grid: Grid, psi: Field) -> Result<Self, ProblemError> {
        if psi.grid() != grid {
            return Err(FieldError::GridMismatch {
                left: grid.n(),
                right: psi.grid().n(),
            }
            .into());
        }
        let hessian = assemble_laplacian(grid).scale(2.0);
        Ok(ObstacleProblem { grid, psi, hessian })
    }

    pub fn obstacle(&self) -> &Field {
        &self.psi
    }
}

impl Problem for ObstacleProblem {
    fn grid(&self) -> Grid {
        self.grid
    }

    fn objective(&self, x: &Field) -> Result<f64, ProblemError> {
        let hx = Field::from_values(self.grid, self.hessian.apply(x.values())?)?;
        Ok(0.5 * hx.inner(x, self.weight())?)
    }

    fn objective_gradient(&self, x: &Field) -> Result<Field, ProblemError> {
        Ok(Field::from_values(
            self.grid,
            self.hessian.apply(x.values())?,
        )?)
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
        Ok(SemismoothSystem {
            active_mask: active_mask(&g, w, rho),
            rho,
            operator: NewtonOperator::DiagonallyPenalized {
                hessian_base: self.hessian.clone(),
            },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::InnerProductWeight;
    use crate::problems::tests::check_gradient_fd;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_iterate_has_zero_objective_and_gradient() {
        let p = ObstacleProblem::new(Grid::new(4));
        let u = Field::zeros(p.grid());
        assert_eq!(p.objective(&u).unwrap(), 0.0);
        assert_eq!(p.objective_gradient(&u).unwrap().norm_inf(), 0.0);
    }

    #[test]
    fn obstacle_formula_peak_and_support() {
        let grid = Grid::new(9);
        let psi = default_obstacle(grid);
        // Center of the n = 9 grid is exactly (0.5, 0.5).
        let center = psi.values()[4 * 9 + 4];
        assert!((center - 0.1).abs() < 1e-15);
        // Corners are outside the cone's support.
        assert_eq!(psi.values()[0], 0.0);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let grid = Grid::new(8);
        let p = ObstacleProblem::new(grid);
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..3 {
            let u = Field::from_values(
                grid,
                (0..grid.len()).map(|_| rng.random_range(-0.3..0.3)).collect(),
            )
            .unwrap();
            check_gradient_fd(&p, &u, 1e-6);
        }
    }

    #[test]
    fn objective_is_convex_along_random_pairs() {
        let grid = Grid::new(6);
        let p = ObstacleProblem::new(grid);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let u = Field::from_values(
                grid,
                (0..grid.len()).map(|_| rng.random_range(-1.0..1.0)).collect(),
            )
            .unwrap();
            let v = Field::from_values(
                grid,
                (0..grid.len()).map(|_| rng.random_range(-1.0..1.0)).collect(),
            )
            .unwrap();
            let du = &u - &v;
            let dg = &p.objective_gradient(&u).unwrap() - &p.objective_gradient(&v).unwrap();
            let pairing = dg.inner(&du, InnerProductWeight::MeshWeighted).unwrap();
            assert!(pairing >= -1e-12, "monotone gradient violated: {pairing}");
        }
    }
}
