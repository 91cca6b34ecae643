//! Small analytic problems with hand-checkable KKT points, used by the test
//! suite and handy for validating solver configurations.

use super::{active_mask, Problem, ProblemError};
use crate::field::{Field, FieldError, Grid, InnerProductWeight};
use crate::linalg::CsrMatrix;
use crate::newton::{NewtonOperator, SemismoothSystem};

/// `min x^2  s.t.  1 - x <= 0` on a one-point grid with the unweighted
/// inner product. The KKT point is `x = 1`, `lambda = 2`.
pub struct PointConstrainedQuadratic;

impl PointConstrainedQuadratic {
    pub fn grid() -> Grid {
        Grid::new(1)
    }
}

impl Problem for PointConstrainedQuadratic {
    fn grid(&self) -> Grid {
        Self::grid()
    }

    fn weight(&self) -> InnerProductWeight {
        InnerProductWeight::Unweighted
    }

    fn objective(&self, x: &Field) -> Result<f64, ProblemError> {
        Ok(x.values()[0] * x.values()[0])
    }

    fn objective_gradient(&self, x: &Field) -> Result<Field, ProblemError> {
        Ok(x * 2.0)
    }

    fn constraint(&self, x: &Field) -> Result<Field, ProblemError> {
        Ok(x.map(|v| 1.0 - v))
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
                hessian_base: CsrMatrix::from_triplets(1, &[(0, 0, 2.0)]),
            },
        })
    }
}

/// `min 1/2 x' Q x - c' x  s.t.  x >= lower`, unweighted. With SPD `Q` this
/// is a strongly convex quadratic program whose KKT system is solvable
/// directly, which makes it a good oracle target.
pub struct BoundQp {
    grid: Grid,
    q: CsrMatrix,
    c: Field,
    lower: Field,
}

impl BoundQp {
    pub fn new(grid: Grid, q: CsrMatrix, c: Field, lower: Field) -> Result<Self, ProblemError> {
        if q.dim() != grid.len() {
            return Err(FieldError::LengthMismatch {
                n: grid.n(),
                expected: grid.len(),
                got: q.dim(),
            }
            .into());
        }
        for f in [&c, &lower] {
            if f.grid() != grid {
                return Err(FieldError::GridMismatch {
                    left: grid.n(),
                    right: f.grid().n(),
                }
                .into());
            }
        }
        Ok(BoundQp { grid, q, c, lower })
    }

    pub fn lower(&self) -> &Field {
        &self.lower
    }

    pub fn quadratic_term(&self) -> &CsrMatrix {
        &self.q
    }
}

impl Problem for BoundQp {
    fn grid(&self) -> Grid {
        self.grid
    }

    fn weight(&self) -> InnerProductWeight {
        InnerProductWeight::Unweighted
    }

    fn objective(&self, x: &Field) -> Result<f64, ProblemError> {
        let qx = Field::from_values(self.grid, self.q.apply(x.values())?)?;
        Ok(0.5 * qx.inner(x, self.weight())? - self.c.inner(x, self.weight())?)
    }

    fn objective_gradient(&self, x: &Field) -> Result<Field, ProblemError> {
        let qx = Field::from_values(self.grid, self.q.apply(x.values())?)?;
        Ok(&qx - &self.c)
    }

    fn constraint(&self, x: &Field) -> Result<Field, ProblemError> {
        Ok(&self.lower - x)
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
                hessian_base: self.q.clone(),
            },
        })
    }
}

/// A diagonal quadratic objective with a single affine constraint
/// `<a, x> <= b`, padded to the field-valued constraint contract with
/// always-feasible dummy components.
pub struct SingleAffineQp {
    grid: Grid,
    q_diag: Vec<f64>,
    c: Field,
    a: Field,
    b: f64,
}

impl SingleAffineQp {
    pub fn new(grid: Grid, q_diag: Vec<f64>, c: Field, a: Field, b: f64) -> Result<Self, ProblemError> {
        if q_diag.len() != grid.len() {
            return Err(FieldError::LengthMismatch {
                n: grid.n(),
                expected: grid.len(),
                got: q_diag.len(),
            }
            .into());
        }
        assert!(q_diag.iter().all(|&q| q > 0.0), "diagonal must be positive");
        Ok(SingleAffineQp {
            grid,
            q_diag,
            c,
            a,
            b,
        })
    }

    fn affine_value(&self, x: &Field) -> Result<f64, ProblemError> {
        Ok(self.a.inner(x, self.weight())? - self.b)
    }
}

impl Problem for SingleAffineQp {
    fn grid(&self) -> Grid {
        self.grid
    }

    fn weight(&self) -> InnerProductWeight {
        InnerProductWeight::Unweighted
    }

    fn objective(&self, x: &Field) -> Result<f64, ProblemError> {
        Ok(x.values()
            .iter()
            .zip(&self.q_diag)
            .zip(self.c.values())
            .map(|((xi, qi), ci)| 0.5 * qi * xi * xi - ci * xi)
            .sum())
    }

    fn objective_gradient(&self, x: &Field) -> Result<Field, ProblemError> {
        let values = x
            .values()
            .iter()
            .zip(&self.q_diag)
            .zip(self.c.values())
            .map(|((xi, qi), ci)| qi * xi - ci)
            .collect();
        Ok(Field::from_values(self.grid, values)?)
    }

    fn constraint(&self, x: &Field) -> Result<Field, ProblemError> {
        let mut g = Field::constant(self.grid, -1.0);
        g.values_mut()[0] = self.affine_value(x)?;
        Ok(g)
    }

    fn constraint_adjoint_apply(&self, _x: &Field, mu: &Field) -> Result<Field, ProblemError> {
        Ok(&self.a * mu.values()[0])
    }

    fn hessian_operator(
        &self,
        x: &Field,
        w: &Field,
        rho: f64,
    ) -> Result<SemismoothSystem, ProblemError> {
        let g = self.constraint(x)?;
        let mask = active_mask(&g, w, rho);
        let dim = self.grid.len();
        let mut triplets: Vec<(usize, usize, f64)> =
            (0..dim).map(|i| (i, i, self.q_diag[i])).collect();
        if mask.values()[0] > 0.0 {
            for i in 0..dim {
                for j in 0..dim {
                    triplets.push((i, j, rho * self.a.values()[i] * self.a.values()[j]));
                }
            }
        }
        Ok(SemismoothSystem {
            active_mask: mask,
            rho,
            operator: NewtonOperator::Assembled {
                matrix: CsrMatrix::from_triplets(dim, &triplets),
            },
        })
    }
}
