//! Compressed-row matrices, the Neumann Laplacian and the inpainting system
//! `A = C + (C − I)L`, with a banded direct solver.

mod banded;

use std::fmt::Write as _;
use std::io;

use crate::error::{check_len, Error, Result};

pub use banded::{solve, solve_transpose, BandedLu, SparseLu, DEFAULT_SOLVE_TOL};

/// Compressed sparse row matrix. Column indices are strictly increasing
/// within each row and no explicit zeros are stored.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Builds from `(row, col, value)` triplets; duplicates are summed and
    /// resulting zeros dropped.
    pub fn from_triplets(rows: usize, cols: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut sorted = triplets.to_vec();
        if let Some(&(i, j, _)) = sorted.iter().find(|&&(i, j, _)| i >= rows || j >= cols) {
            return Err(Error::Config(format!(
                "triplet ({i}, {j}) outside a {rows}x{cols} matrix"
            )));
        }
        sorted.sort_by_key(|&(i, j, _)| (i, j));
        let mut row_offsets = vec![0; rows + 1];
        let mut col_indices = Vec::with_capacity(sorted.len());
        let mut values = Vec::with_capacity(sorted.len());
        let mut iter = sorted.into_iter().peekable();
        while let Some((i, j, mut v)) = iter.next() {
            while let Some(&(i2, j2, v2)) = iter.peek() {
                if (i2, j2) != (i, j) {
                    break;
                }
                v += v2;
                iter.next();
            }
            if v != 0.0 {
                col_indices.push(j);
                values.push(v);
                row_offsets[i + 1] += 1;
            }
        }
        for i in 0..rows {
            row_offsets[i + 1] += row_offsets[i];
        }
        Ok(Self {
            rows,
            cols,
            row_offsets,
            col_indices,
            values,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            rows: n,
            cols: n,
            row_offsets: (0..=n).collect(),
            col_indices: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `(column, value)` pairs of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_offsets[i]..self.row_offsets[i + 1];
        self.col_indices[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let range = self.row_offsets[i]..self.row_offsets[i + 1];
        match self.col_indices[range.clone()].binary_search(&j) {
            Ok(k) => self.values[range.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(self.cols, x.len())?;
        Ok((0..self.rows)
            .map(|i| self.row(i).map(|(j, v)| v * x[j]).sum())
            .collect())
    }

    /// `Aᵀx` without forming the transpose.
    pub fn matvec_transpose(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(self.rows, x.len())?;
        let mut y = vec![0.0; self.cols];
        for (i, &xi) in x.iter().enumerate() {
            for (j, v) in self.row(i) {
                y[j] += v * xi;
            }
        }
        Ok(y)
    }

    pub fn transpose(&self) -> Self {
        let triplets: Vec<_> = (0..self.rows)
            .flat_map(|i| self.row(i).map(move |(j, v)| (j, i, v)))
            .collect();
        Self::from_triplets(self.cols, self.rows, &triplets).expect("indices are in range")
    }

    /// Row-major dense copy.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.cols]; self.rows];
        for (i, row) in d.iter_mut().enumerate() {
            for (j, v) in self.row(i) {
                row[j] = v;
            }
        }
        d
    }

    /// Lower and upper bandwidths `(kl, ku)`.
    pub fn bandwidths(&self) -> (usize, usize) {
        let mut kl = 0;
        let mut ku = 0;
        for i in 0..self.rows {
            for (j, _) in self.row(i) {
                if j < i {
                    kl = kl.max(i - j);
                } else {
                    ku = ku.max(j - i);
                }
            }
        }
        (kl, ku)
    }

    /// Matrix Market coordinate format, 1-based indices.
    pub fn to_matrix_market(&self) -> String {
        let mut s = String::from("%%MatrixMarket matrix coordinate real general\n");
        let _ = writeln!(s, "{} {} {}", self.rows, self.cols, self.nnz());
        for i in 0..self.rows {
            for (j, v) in self.row(i) {
                let _ = writeln!(s, "{} {} {v:e}", i + 1, j + 1);
            }
        }
        s
    }

    pub fn write_matrix_market<W: io::Write>(&self, mut w: W) -> io::Result<()> {
        w.write_all(self.to_matrix_market().as_bytes())
    }
}

/// 5-point Laplacian on a `height × width` grid (row-major pixel order) with
/// homogeneous Neumann boundary: `L = −DᵀD` for forward differences `D`
/// with zero flux across the border.
pub fn assemble_laplacian(height: usize, width: usize) -> Result<SparseMatrix> {
    if height == 0 || width == 0 {
        return Err(Error::Config(format!("grid must be non-empty, got {height}x{width}")));
    }
    let n = height * width;
    let mut t = Vec::with_capacity(5 * n);
    for i in 0..height {
        for j in 0..width {
            let p = i * width + j;
            let mut neighbors = Vec::with_capacity(4);
            if i > 0 {
                neighbors.push(p - width);
            }
            if j > 0 {
                neighbors.push(p - 1);
            }
            if j + 1 < width {
                neighbors.push(p + 1);
            }
            if i + 1 < height {
                neighbors.push(p + width);
            }
            t.push((p, p, -(neighbors.len() as f64)));
            t.extend(neighbors.into_iter().map(|q| (p, q, 1.0)));
        }
    }
    SparseMatrix::from_triplets(n, n, &t)
}

/// `A = C + (C − I)L` with `C = diag(c)`: row `i` is `c_i e_iᵀ + (c_i − 1) L_i`.
pub fn assemble_system(c: &[f64], laplacian: &SparseMatrix) -> Result<SparseMatrix> {
    check_len(laplacian.rows(), c.len())?;
    let mut t = Vec::with_capacity(laplacian.nnz() + c.len());
    for (i, &ci) in c.iter().enumerate() {
        t.push((i, i, ci));
        t.extend(laplacian.row(i).map(|(j, v)| (i, j, (ci - 1.0) * v)));
    }
    SparseMatrix::from_triplets(laplacian.rows(), laplacian.cols(), &t)
}
