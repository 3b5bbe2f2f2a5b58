use crate::exec;
use crate::{Error, Result};

/// Square sparse matrix in compressed sparse row layout.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    dim: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
    symmetric: bool,
}

impl SparseOperator {
    pub fn identity(dim: usize) -> Self {
        SparseOperator {
            dim,
            row_ptr: (0..=dim).collect(),
            col_idx: (0..dim).collect(),
            values: vec![1.0; dim],
            symmetric: true,
        }
    }

    /// Build from per-row lists of `(column, value)`; columns must be sorted
    /// and unique within each row.
    pub fn from_rows(rows: Vec<Vec<(usize, f64)>>, symmetric: bool) -> Self {
        let dim = rows.len();
        let nnz = rows.iter().map(Vec::len).sum();
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut col_idx = Vec::with_capacity(nnz);
        let mut values = Vec::with_capacity(nnz);
        row_ptr.push(0);
        for row in rows {
            debug_assert!(row.windows(2).all(|w| w[0].0 < w[1].0));
            for (c, v) in row {
                col_idx.push(c);
                values.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        SparseOperator {
            dim,
            row_ptr,
            col_idx,
            values,
            symmetric,
        }
    }

    pub fn from_dense(dense: &[Vec<f64>], symmetric: bool) -> Self {
        let rows = dense
            .iter()
            .map(|r| r.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(c, v)| (c, *v)).collect())
            .collect();
        Self::from_rows(rows, symmetric)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[r.clone()].binary_search(&j) {
            Ok(k) => self.values[r.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.dim]; self.dim];
        for (i, row) in d.iter_mut().enumerate() {
            for (j, v) in self.row(i) {
                row[j] = v;
            }
        }
        d
    }

    /// `y = A x`.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(self.apply_unchecked(x))
    }

    pub(crate) fn apply_unchecked(&self, x: &[f64]) -> Vec<f64> {
        const CHUNK: usize = 256;
        let chunks = exec::map_indexed(self.dim.div_ceil(CHUNK), |c| {
            let rows = c * CHUNK..((c + 1) * CHUNK).min(self.dim);
            rows.map(|i| self.row(i).map(|(j, v)| v * x[j]).sum::<f64>()).collect::<Vec<f64>>()
        });
        chunks.concat()
    }

    /// `alpha * A + beta * I` (the identity is added to the stored diagonal).
    pub fn scaled_plus_identity(&self, alpha: f64, beta: f64) -> SparseOperator {
        let rows = (0..self.dim)
            .map(|i| {
                let mut row: Vec<(usize, f64)> = self.row(i).map(|(j, v)| (j, alpha * v)).collect();
                match row.binary_search_by_key(&i, |e| e.0) {
                    Ok(k) => row[k].1 += beta,
                    Err(k) => row.insert(k, (i, beta)),
                }
                row
            })
            .collect();
        SparseOperator::from_rows(rows, self.symmetric)
    }

    /// Inverses of the diagonal blocks of size `block`, stored row-major.
    pub fn block_diagonal_inverse(&self, block: usize) -> Vec<f64> {
        assert_eq!(self.dim % block, 0);
        let blocks = exec::map_indexed(self.dim / block, |b| {
            let base = b * block;
            let mut m = vec![0.0; block * block];
            for i in 0..block {
                for (j, v) in self.row(base + i) {
                    if (base..base + block).contains(&j) {
                        m[i * block + (j - base)] = v;
                    }
                }
            }
            invert_small(&m, block)
        });
        blocks.concat()
    }

    /// Largest `|A_ij - A_ji|` relative to the largest `|A_ij|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for i in 0..self.dim {
            for (j, v) in self.row(i) {
                scale = scale.max(v.abs());
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        if scale == 0.0 {
            0.0
        } else {
            worst / scale
        }
    }
}

/// Gauss–Jordan inverse with partial pivoting of a small dense matrix.
fn invert_small(m: &[f64], n: usize) -> Vec<f64> {
    let mut a = m.to_vec();
    let mut inv = vec![0.0; n * n];
    for i in 0..n {
        inv[i * n + i] = 1.0;
    }
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i * n + col].abs().partial_cmp(&a[j * n + col].abs()).unwrap())
            .unwrap();
        if pivot != col {
            for k in 0..n {
                a.swap(col * n + k, pivot * n + k);
                inv.swap(col * n + k, pivot * n + k);
            }
        }
        let d = a[col * n + col];
        for k in 0..n {
            a[col * n + k] /= d;
            inv[col * n + k] /= d;
        }
        for r in 0..n {
            if r != col {
                let f = a[r * n + col];
                if f != 0.0 {
                    for k in 0..n {
                        a[r * n + k] -= f * a[col * n + k];
                        inv[r * n + k] -= f * inv[col * n + k];
                    }
                }
            }
        }
    }
    inv
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn apply_and_identity_shift() {
        let a = SparseOperator::from_dense(&[vec![2.0, -1.0], vec![-1.0, 2.0]], true);
        assert_eq!(a.apply(&[1.0, 1.0]).unwrap(), vec![1.0, 1.0]);
        let b = a.scaled_plus_identity(2.0, 1.0);
        assert_eq!(b.to_dense(), vec![vec![5.0, -2.0], vec![-2.0, 5.0]]);
        assert_eq!(a.asymmetry(), 0.0);
        assert!(a.apply(&[1.0]).is_err());
    }

    #[test]
    fn block_inverse() {
        let a = SparseOperator::from_dense(&[vec![4.0, 1.0, 0.0, 0.0], vec![2.0, 3.0, 0.0, 0.0], vec![0.0, 0.0, 0.0, 2.0], vec![0.0, 0.0, 1.0, 0.0]], false);
        let inv = a.block_diagonal_inverse(2);
        let expected = [0.3, -0.1, -0.2, 0.4, 0.0, 1.0, 0.5, 0.0];
        for (x, y) in inv.iter().zip(expected) {
            assert!((x - y).abs() < 1e-15);
        }
    }
}
