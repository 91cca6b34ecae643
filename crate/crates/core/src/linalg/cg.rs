//! Preconditioned conjugate gradients.

/// A symmetric positive definite operator applied matrix-free.
pub trait LinearOperator {
    fn dim(&self) -> usize;
    fn apply_into(&self, x: &[f64], out: &mut [f64]);
}

/// Result of a conjugate gradient run. `converged` is false when the
/// iteration cap was reached first; the iterate is still returned, which
/// callers may use as a truncated direction.
#[derive(Clone, Debug)]
pub struct CgOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub relative_residual: f64,
    pub converged: bool,
}

/// Runs (Jacobi-)preconditioned CG on `op x = rhs` from a zero start until
/// the 2-norm residual drops below `rel_tol * ||rhs||`.
pub fn conjugate_gradient(
    op: &dyn LinearOperator,
    rhs: &[f64],
    rel_tol: f64,
    max_iter: usize,
    jacobi: Option<&[f64]>,
) -> CgOutcome {
    let dim = op.dim();
    assert_eq!(rhs.len(), dim, "rhs length mismatch");
    let norm_rhs = norm2(rhs);
    if norm_rhs == 0.0 {
        return CgOutcome {
            x: vec![0.0; dim],
            iterations: 0,
            relative_residual: 0.0,
            converged: true,
        };
    }
    let target = rel_tol * norm_rhs;

    let mut x = vec![0.0; dim];
    let mut r = rhs.to_vec();
    let precond = |r: &[f64], z: &mut Vec<f64>| {
        z.clear();
        match jacobi {
            Some(d) => z.extend(r.iter().zip(d).map(|(ri, di)| ri / di)),
            None => z.extend_from_slice(r),
        }
    };
    let mut z = Vec::with_capacity(dim);
    precond(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; dim];
    let mut res_norm = norm_rhs;

    for iter in 0..max_iter {
        if res_norm <= target {
            return CgOutcome {
                x,
                iterations: iter,
                relative_residual: res_norm / norm_rhs,
                converged: true,
            };
        }
        op.apply_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            // Loss of positive definiteness at working precision; stop with
            // what we have.
            return CgOutcome {
                x,
                iterations: iter,
                relative_residual: res_norm / norm_rhs,
                converged: res_norm <= target,
            };
        }
        let alpha = rz / pap;
        for ((xi, pi), (ri, api)) in x.iter_mut().zip(&p).zip(r.iter_mut().zip(&ap)) {
            *xi += alpha * pi;
            *ri -= alpha * api;
        }
        res_norm = norm2(&r);
        precond(&r, &mut z);
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
    }

    CgOutcome {
        x,
        iterations: max_iter,
        relative_residual: res_norm / norm_rhs,
        converged: res_norm <= target,
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Grid;
    use crate::linalg::assemble_laplacian;

    #[test]
    fn zero_rhs_returns_zero() {
        let a = assemble_laplacian(Grid::new(3));
        let out = conjugate_gradient(&a, &[0.0; 9], 1e-12, 100, None);
        assert!(out.converged);
        assert_eq!(out.x, vec![0.0; 9]);
        assert_eq!(out.iterations, 0);
    }

    #[test]
    fn converges_on_laplacian() {
        let a = assemble_laplacian(Grid::new(10));
        let rhs = vec![1.0; a.dim()];
        let diag = a.diagonal();
        let out = conjugate_gradient(&a, &rhs, 1e-12, 10_000, Some(&diag));
        assert!(out.converged, "residual {}", out.relative_residual);
        let ax = a.apply(&out.x).unwrap();
        let res: f64 = ax
            .iter()
            .zip(&rhs)
            .map(|(l, r)| (l - r) * (l - r))
            .sum::<f64>()
            .sqrt();
        assert!(res <= 1e-10 * (a.dim() as f64).sqrt());
    }

    #[test]
    fn iteration_cap_reports_non_convergence() {
        let a = assemble_laplacian(Grid::new(10));
        let rhs = vec![1.0; a.dim()];
        let out = conjugate_gradient(&a, &rhs, 1e-14, 3, None);
        assert!(!out.converged);
        assert_eq!(out.iterations, 3);
        assert!(out.relative_residual > 0.0);
    }
}
