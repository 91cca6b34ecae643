//! Banded Cholesky factorization.
//!
//! The Newton matrices in this crate are the five-point Laplacian plus a
//! diagonal, so with the natural row-major ordering all fill stays inside a
//! band of width `n`. The factor is stored column-wise as a dense band,
//! which keeps the update loops on contiguous slices.

use super::{CsrMatrix, LinalgError};

/// Lower-triangular Cholesky factor of an SPD matrix, stored as a dense
/// band: entry `L[j + t, j]` lives at `band[j * (bandwidth + 1) + t]`.
#[derive(Clone, Debug)]
pub struct BandCholesky {
    dim: usize,
    bandwidth: usize,
    band: Vec<f64>,
}

impl BandCholesky {
    /// Factors `a`. The caller guarantees symmetry; only the lower triangle
    /// is read.
    pub fn factor(a: &CsrMatrix) -> Result<Self, LinalgError> {
        Self::factor_with(a, None, 0.0)
    }

    /// Factors `a + diag(extra_diagonal) + shift * I` without forming the
    /// shifted matrix.
    pub fn factor_with(
        a: &CsrMatrix,
        extra_diagonal: Option<&[f64]>,
        shift: f64,
    ) -> Result<Self, LinalgError> {
        let dim = a.dim();
        if let Some(d) = extra_diagonal {
            if d.len() != dim {
                return Err(LinalgError::DimensionMismatch {
                    expected: dim,
                    got: d.len(),
                });
            }
        }
        let bandwidth = a.bandwidth();
        let stride = bandwidth + 1;
        let mut band = vec![0.0; dim * stride];
        for i in 0..dim {
            for (j, v) in a.row(i) {
                if j <= i {
                    band[j * stride + (i - j)] = v;
                }
            }
            band[i * stride] += shift;
            if let Some(d) = extra_diagonal {
                band[i * stride] += d[i];
            }
        }

        for j in 0..dim {
            let len = bandwidth.min(dim - 1 - j);
            let pivot = band[j * stride];
            if !(pivot > 0.0) || !pivot.is_finite() {
                return Err(LinalgError::NotPositiveDefinite { index: j });
            }
            let d = pivot.sqrt();
            band[j * stride] = d;
            let inv = 1.0 / d;
            for t in 1..=len {
                band[j * stride + t] *= inv;
            }
            for i in 1..=len {
                let l_ij = band[j * stride + i];
                if l_ij == 0.0 {
                    continue;
                }
                let count = len - i + 1;
                let (head, tail) = band.split_at_mut((j + i) * stride);
                let src = &head[j * stride + i..j * stride + i + count];
                let dst = &mut tail[..count];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d -= l_ij * s;
                }
            }
        }
        Ok(BandCholesky {
            dim,
            bandwidth,
            band,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Solves `L L^T x = rhs`.
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        assert_eq!(rhs.len(), self.dim, "rhs length mismatch");
        let stride = self.bandwidth + 1;
        let mut x = rhs.to_vec();
        // Forward substitution, column oriented so the band stays contiguous.
        for j in 0..self.dim {
            let len = self.bandwidth.min(self.dim - 1 - j);
            let yj = x[j] / self.band[j * stride];
            x[j] = yj;
            let col = &self.band[j * stride + 1..j * stride + 1 + len];
            for (t, l) in col.iter().enumerate() {
                x[j + 1 + t] -= l * yj;
            }
        }
        // Back substitution with the transpose; row j of L^T is column j of L.
        for j in (0..self.dim).rev() {
            let len = self.bandwidth.min(self.dim - 1 - j);
            let col = &self.band[j * stride + 1..j * stride + 1 + len];
            let mut acc = x[j];
            for (t, l) in col.iter().enumerate() {
                acc -= l * x[j + 1 + t];
            }
            x[j] = acc / self.band[j * stride];
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Grid;
    use crate::linalg::assemble_laplacian;

    #[test]
    fn factor_and_solve_small_system() {
        // [[4, 2], [2, 3]] has Cholesky [[2, 0], [1, sqrt(2)]].
        let a = CsrMatrix::from_triplets(2, &[(0, 0, 4.0), (0, 1, 2.0), (1, 0, 2.0), (1, 1, 3.0)]);
        let f = BandCholesky::factor(&a).unwrap();
        let x = f.solve(&[10.0, 8.0]);
        // Solve by hand: x = [7/4, 3/2].
        assert!((x[0] - 1.75).abs() < 1e-14);
        assert!((x[1] - 1.5).abs() < 1e-14);
    }

    #[test]
    fn indefinite_matrix_is_rejected() {
        let a = CsrMatrix::from_triplets(2, &[(0, 0, 1.0), (1, 1, -1.0)]);
        assert_eq!(
            BandCholesky::factor(&a).unwrap_err(),
            LinalgError::NotPositiveDefinite { index: 1 }
        );
    }

    #[test]
    fn shifted_factorization_matches_explicit_shift() {
        let a = assemble_laplacian(Grid::new(4));
        let d: Vec<f64> = (0..a.dim()).map(|i| i as f64).collect();
        let explicit = a.add_diagonal(&d).unwrap();
        let rhs: Vec<f64> = (0..a.dim()).map(|i| (i as f64).sin()).collect();
        let x1 = BandCholesky::factor(&explicit).unwrap().solve(&rhs);
        let x2 = BandCholesky::factor_with(&a, Some(&d), 0.0).unwrap().solve(&rhs);
        for (a, b) in x1.iter().zip(&x2) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn residual_is_machine_precision_on_laplacian() {
        let a = assemble_laplacian(Grid::new(12));
        let rhs: Vec<f64> = (0..a.dim()).map(|i| ((i * 7 % 13) as f64) - 6.0).collect();
        let x = BandCholesky::factor(&a).unwrap().solve(&rhs);
        let ax = a.apply(&x).unwrap();
        let scale: f64 = rhs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (l, r) in ax.iter().zip(&rhs) {
            assert!((l - r).abs() <= 1e-9 * scale.max(1.0));
        }
    }
}
