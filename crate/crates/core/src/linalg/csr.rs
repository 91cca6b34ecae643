//! Compressed sparse row storage.

use super::cg::LinearOperator;
use super::LinalgError;

/// A square sparse matrix in compressed row storage. Column indices are
/// strictly increasing within each row.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    dim: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from raw CSR arrays. Callers must supply sorted, deduplicated
    /// column indices per row; this is checked in debug builds.
    pub(crate) fn from_raw(
        dim: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        values: Vec<f64>,
    ) -> Self {
        debug_assert_eq!(row_ptr.len(), dim + 1);
        debug_assert_eq!(col_idx.len(), values.len());
        debug_assert!((0..dim).all(|i| {
            let row = &col_idx[row_ptr[i]..row_ptr[i + 1]];
            row.windows(2).all(|w| w[0] < w[1]) && row.iter().all(|&j| j < dim)
        }));
        CsrMatrix {
            dim,
            row_ptr,
            col_idx,
            values,
        }
    }

    /// Builds a `dim x dim` matrix from `(row, col, value)` triplets.
    /// Duplicate positions are summed.
    pub fn from_triplets(dim: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut entries = std::collections::BTreeMap::new();
        for &(i, j, v) in triplets {
            assert!(i < dim && j < dim, "triplet ({i}, {j}) out of range");
            *entries.entry((i, j)).or_insert(0.0) += v;
        }
        let mut row_ptr = vec![0usize; dim + 1];
        let mut col_idx = Vec::with_capacity(entries.len());
        let mut values = Vec::with_capacity(entries.len());
        for ((i, j), v) in entries {
            col_idx.push(j);
            values.push(v);
            row_ptr[i + 1] = col_idx.len();
        }
        for r in 1..=dim {
            row_ptr[r] = row_ptr[r].max(row_ptr[r - 1]);
        }
        CsrMatrix::from_raw(dim, row_ptr, col_idx, values)
    }

    pub fn identity(dim: usize) -> Self {
        let triplets: Vec<_> = (0..dim).map(|i| (i, i, 1.0)).collect();
        CsrMatrix::from_triplets(dim, &triplets)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Iterates `(column, value)` pairs of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let start = self.row_ptr[i];
        let end = self.row_ptr[i + 1];
        self.col_idx[start..end]
            .iter()
            .zip(&self.values[start..end])
            .map(|(&j, &v)| (j, v))
    }

    /// Matrix-vector product into a preallocated buffer.
    pub(crate) fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.dim);
        debug_assert_eq!(out.len(), self.dim);
        for i in 0..self.dim {
            let start = self.row_ptr[i];
            let end = self.row_ptr[i + 1];
            let mut acc = 0.0;
            for (j, v) in self.col_idx[start..end].iter().zip(&self.values[start..end]) {
                acc += v * x[*j];
            }
            out[i] = acc;
        }
    }

    /// Matrix-vector product.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>, LinalgError> {
        if x.len() != self.dim {
            return Err(LinalgError::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        let mut out = vec![0.0; self.dim];
        self.apply_into(x, &mut out);
        Ok(out)
    }

    /// Returns `A + diag(d)`, inserting diagonal entries where absent.
    pub fn add_diagonal(&self, d: &[f64]) -> Result<CsrMatrix, LinalgError> {
        if d.len() != self.dim {
            return Err(LinalgError::DimensionMismatch {
                expected: self.dim,
                got: d.len(),
            });
        }
        let mut row_ptr = Vec::with_capacity(self.dim + 1);
        let mut col_idx = Vec::with_capacity(self.nnz() + self.dim);
        let mut values = Vec::with_capacity(self.nnz() + self.dim);
        row_ptr.push(0);
        for i in 0..self.dim {
            let mut placed = false;
            for (j, v) in self.row(i) {
                if !placed && j >= i {
                    if j == i {
                        col_idx.push(i);
                        values.push(v + d[i]);
                    } else {
                        col_idx.push(i);
                        values.push(d[i]);
                        col_idx.push(j);
                        values.push(v);
                    }
                    placed = true;
                    continue;
                }
                col_idx.push(j);
                values.push(v);
            }
            if !placed {
                col_idx.push(i);
                values.push(d[i]);
            }
            row_ptr.push(col_idx.len());
        }
        Ok(CsrMatrix::from_raw(self.dim, row_ptr, col_idx, values))
    }

    /// Scales every entry by `s`.
    pub fn scale(&self, s: f64) -> CsrMatrix {
        CsrMatrix {
            dim: self.dim,
            row_ptr: self.row_ptr.clone(),
            col_idx: self.col_idx.clone(),
            values: self.values.iter().map(|v| s * v).collect(),
        }
    }

    /// Diagonal entries (zero where the diagonal is absent).
    pub fn diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.dim];
        for i in 0..self.dim {
            for (j, v) in self.row(i) {
                if j == i {
                    d[i] = v;
                }
            }
        }
        d
    }

    /// Maximum `|i - j|` over stored entries.
    pub fn bandwidth(&self) -> usize {
        let mut bw = 0;
        for i in 0..self.dim {
            for (j, _) in self.row(i) {
                bw = bw.max(i.abs_diff(j));
            }
        }
        bw
    }

    /// Checks `|a_ij - a_ji| <= tol` over the sparsity pattern.
    pub fn is_symmetric(&self, tol: f64) -> bool {
        for i in 0..self.dim {
            for (j, v) in self.row(i) {
                let vt = self.get(j, i);
                if (v - vt).abs() > tol {
                    return false;
                }
            }
        }
        true
    }

    /// Entry lookup; zero when the position is not stored.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let start = self.row_ptr[i];
        let end = self.row_ptr[i + 1];
        match self.col_idx[start..end].binary_search(&j) {
            Ok(pos) => self.values[start + pos],
            Err(_) => 0.0,
        }
    }
}

impl LinearOperator for CsrMatrix {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        CsrMatrix::apply_into(self, x, out);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn triplets_sum_duplicates_and_sort() {
        let a = CsrMatrix::from_triplets(2, &[(1, 0, 2.0), (0, 1, 3.0), (1, 0, 0.5), (0, 0, 1.0)]);
        assert_eq!(a.row(0).collect::<Vec<_>>(), vec![(0, 1.0), (1, 3.0)]);
        assert_eq!(a.row(1).collect::<Vec<_>>(), vec![(0, 2.5)]);
        assert_eq!(a.get(1, 1), 0.0);
    }

    #[test]
    fn identity_applies_as_identity() {
        let a = CsrMatrix::identity(4);
        let x = vec![1.0, -2.0, 3.5, 0.0];
        assert_eq!(a.apply(&x).unwrap(), x);
    }

    #[test]
    fn zero_matrix_maps_to_zero() {
        let a = CsrMatrix::from_triplets(3, &[]);
        assert_eq!(a.apply(&[1.0, 2.0, 3.0]).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn symmetric_matrix_pairing_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut triplets = Vec::new();
        for i in 0..6 {
            for j in 0..=i {
                let v = rng.random_range(-1.0..1.0);
                triplets.push((i, j, v));
                if i != j {
                    triplets.push((j, i, v));
                }
            }
        }
        let a = CsrMatrix::from_triplets(6, &triplets);
        assert!(a.is_symmetric(0.0));
        let x: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
        let y: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
        let ax = a.apply(&x).unwrap();
        let ay = a.apply(&y).unwrap();
        let lhs: f64 = ax.iter().zip(&y).map(|(a, b)| a * b).sum();
        let rhs: f64 = x.iter().zip(&ay).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn add_diagonal_zero_is_identity_operation() {
        let a = CsrMatrix::from_triplets(3, &[(0, 1, 2.0), (1, 1, 1.0), (2, 0, -1.0)]);
        let b = a.add_diagonal(&[0.0; 3]).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(a.get(i, j), b.get(i, j));
            }
        }
    }

    #[test]
    fn add_diagonal_to_zero_matrix() {
        let a = CsrMatrix::from_triplets(3, &[]);
        let b = a.add_diagonal(&[2.0, 2.0, 2.0]).unwrap();
        assert_eq!(b.apply(&[1.0, -1.0, 0.5]).unwrap(), vec![2.0, -2.0, 1.0]);
    }

    #[test]
    fn add_diagonal_inserts_missing_entries() {
        let a = CsrMatrix::from_triplets(3, &[(0, 2, 5.0), (1, 0, 1.0)]);
        let b = a.add_diagonal(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(b.get(0, 0), 1.0);
        assert_eq!(b.get(0, 2), 5.0);
        assert_eq!(b.get(1, 1), 2.0);
        assert_eq!(b.get(2, 2), 3.0);
        assert_eq!(b.row(0).collect::<Vec<_>>(), vec![(0, 1.0), (2, 5.0)]);
    }

    #[test]
    fn apply_dimension_mismatch() {
        let a = CsrMatrix::identity(3);
        assert!(matches!(
            a.apply(&[1.0, 2.0]),
            Err(LinalgError::DimensionMismatch {
                expected: 3,
                got: 2
            })
        ));
    }
}
