use crate::error::{check_len, Error, Result};
use crate::linalg::norm;

use super::SparseMatrix;

/// Default relative residual tolerance for [`solve`] and [`solve_transpose`].
pub const DEFAULT_SOLVE_TOL: f64 = 1e-10;

const MAX_REFINEMENT_STEPS: usize = 4;

/// LU factorization of a banded matrix with partial (row) pivoting.
///
/// Row exchanges widen the upper band of `U` from `ku` to `kl + ku`. The
/// factors are kept in the `P_0, M_0, P_1, M_1, …` form: at step `k` row `k`
/// is swapped with `pivots[k]` and then eliminated with the multipliers of
/// column `k`.
#[derive(Debug, Clone)]
pub struct BandedLu {
    n: usize,
    kl: usize,
    /// Width of a stored row of `U`: `kl + ku + 1`.
    uw: usize,
    /// `U[k][k + d]` at `u[k * uw + d]`.
    u: Vec<f64>,
    /// Multiplier for row `k + 1 + d` in column `k` at `l[k * kl + d]`.
    l: Vec<f64>,
    pivots: Vec<usize>,
}

impl BandedLu {
    pub fn factor(a: &SparseMatrix) -> Result<Self> {
        let n = a.rows();
        if a.cols() != n {
            return Err(Error::Config(format!("matrix must be square, got {}x{}", n, a.cols())));
        }
        let (kl, ku) = a.bandwidths();
        let uw = kl + ku + 1;
        // Work rows hold columns i − kl ..= i + kl + ku.
        let w = 2 * kl + ku + 1;
        let mut work = vec![0.0; n * w];
        let mut scale: f64 = 0.0;
        for i in 0..n {
            for (j, v) in a.row(i) {
                work[i * w + j + kl - i] = v;
                scale = scale.max(v.abs());
            }
        }
        let at = |i: usize, j: usize| i * w + j + kl - i;
        let tiny = scale * f64::EPSILON * n.max(1) as f64;
        let mut l = vec![0.0; n * kl];
        let mut pivots = vec![0; n];
        for k in 0..n {
            let last = (k + kl).min(n - 1);
            let mut p = k;
            for r in k + 1..=last {
                if work[at(r, k)].abs() > work[at(p, k)].abs() {
                    p = r;
                }
            }
            pivots[k] = p;
            let pivot = work[at(p, k)];
            if !(pivot.abs() > tiny) {
                return Err(Error::Singular(format!(
                    "pivot {pivot:e} in column {k} below {tiny:e}"
                )));
            }
            let jmax = (k + kl + ku).min(n - 1);
            if p != k {
                for j in k..=jmax {
                    work.swap(at(k, j), at(p, j));
                }
            }
            for r in k + 1..=last {
                let m = work[at(r, k)] / pivot;
                l[k * kl + (r - k - 1)] = m;
                if m != 0.0 {
                    for j in k + 1..=jmax {
                        work[at(r, j)] -= m * work[at(k, j)];
                    }
                }
            }
        }
        let mut u = vec![0.0; n * uw];
        for k in 0..n {
            for d in 0..uw.min(n - k) {
                u[k * uw + d] = work[at(k, k + d)];
            }
        }
        Ok(Self {
            n,
            kl,
            uw,
            u,
            l,
            pivots,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves `Ax = b` with the stored factors (no refinement).
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        check_len(self.n, b.len())?;
        let (n, kl, uw) = (self.n, self.kl, self.uw);
        let mut y = b.to_vec();
        for k in 0..n {
            y.swap(k, self.pivots[k]);
            let yk = y[k];
            for d in 0..kl.min(n - 1 - k) {
                y[k + 1 + d] -= self.l[k * kl + d] * yk;
            }
        }
        for k in (0..n).rev() {
            let mut s = y[k];
            for d in 1..uw.min(n - k) {
                s -= self.u[k * uw + d] * y[k + d];
            }
            y[k] = s / self.u[k * uw];
        }
        Ok(y)
    }

    /// Solves `Aᵀx = b` with the same factors (no refinement).
    pub fn solve_transpose(&self, b: &[f64]) -> Result<Vec<f64>> {
        check_len(self.n, b.len())?;
        let (n, kl, uw) = (self.n, self.kl, self.uw);
        let mut y = b.to_vec();
        // Uᵀ is lower triangular.
        for k in 0..n {
            let s = y[k] / self.u[k * uw];
            y[k] = s;
            for d in 1..uw.min(n - k) {
                y[k + d] -= self.u[k * uw + d] * s;
            }
        }
        for k in (0..n).rev() {
            let mut s = y[k];
            for d in 0..kl.min(n - 1 - k) {
                s -= self.l[k * kl + d] * y[k + 1 + d];
            }
            y[k] = s;
            y.swap(k, self.pivots[k]);
        }
        Ok(y)
    }
}

/// A matrix together with its factorization, for repeated solves with
/// iterative refinement.
#[derive(Debug, Clone)]
pub struct SparseLu {
    matrix: SparseMatrix,
    lu: BandedLu,
}

impl SparseLu {
    pub fn new(matrix: SparseMatrix) -> Result<Self> {
        let lu = BandedLu::factor(&matrix)?;
        Ok(Self { matrix, lu })
    }

    pub fn matrix(&self) -> &SparseMatrix {
        &self.matrix
    }

    /// `x` with `‖Ax − b‖ ≤ tol·max(‖b‖, ε)`.
    pub fn solve(&self, b: &[f64], tol: f64) -> Result<Vec<f64>> {
        self.refine(b, tol, false)
    }

    /// `x` with `‖Aᵀx − b‖ ≤ tol·max(‖b‖, ε)`.
    pub fn solve_transpose(&self, b: &[f64], tol: f64) -> Result<Vec<f64>> {
        self.refine(b, tol, true)
    }

    fn refine(&self, b: &[f64], tol: f64, transpose: bool) -> Result<Vec<f64>> {
        if !(tol > 0.0) {
            return Err(Error::Config(format!("solve tolerance must be > 0, got {tol}")));
        }
        check_len(self.lu.n, b.len())?;
        let apply = |x: &[f64]| {
            if transpose {
                self.matrix.matvec_transpose(x)
            } else {
                self.matrix.matvec(x)
            }
        };
        let inverse = |r: &[f64]| {
            if transpose {
                self.lu.solve_transpose(r)
            } else {
                self.lu.solve(r)
            }
        };
        let target = tol * norm(b).max(f64::MIN_POSITIVE);
        let mut x = inverse(b)?;
        let mut res_norm = f64::INFINITY;
        for _ in 0..=MAX_REFINEMENT_STEPS {
            let ax = apply(&x)?;
            let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
            res_norm = norm(&r);
            if res_norm <= target {
                return Ok(x);
            }
            let dx = inverse(&r)?;
            for (xi, di) in x.iter_mut().zip(&dx) {
                *xi += di;
            }
        }
        Err(Error::Singular(format!(
            "residual {res_norm:e} above {target:e} after refinement; matrix is ill-conditioned"
        )))
    }
}

/// Solves `Ax = b` to relative residual `tol`.
pub fn solve(a: &SparseMatrix, b: &[f64], tol: f64) -> Result<Vec<f64>> {
    SparseLu::new(a.clone())?.solve(b, tol)
}

/// Solves `Aᵀx = b` to relative residual `tol` without forming `Aᵀ`.
pub fn solve_transpose(a: &SparseMatrix, b: &[f64], tol: f64) -> Result<Vec<f64>> {
    SparseLu::new(a.clone())?.solve_transpose(b, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sparse::{assemble_laplacian, assemble_system};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_and_zero_rhs() {
        let a = SparseMatrix::identity(5);
        let b = vec![1.0, -2.0, 3.0, 0.5, 9.0];
        assert_eq!(solve(&a, &b, 1e-10).unwrap(), b);
        let l = assemble_laplacian(3, 3).unwrap();
        let a = assemble_system(&[0.5; 9], &l).unwrap();
        assert_eq!(solve(&a, &[0.0; 9], 1e-10).unwrap(), vec![0.0; 9]);
        assert_eq!(solve_transpose(&a, &[0.0; 9], 1e-10).unwrap(), vec![0.0; 9]);
    }

    #[test]
    fn pivoting_is_needed_and_used() {
        // Zero leading entry forces a row exchange.
        let a = SparseMatrix::from_triplets(3, 3, &[(0, 1, 2.0), (1, 0, 1.0), (1, 1, 1.0), (1, 2, 1.0), (2, 1, 1.0), (2, 2, 3.0)]).unwrap();
        let x = [1.0, 2.0, 3.0];
        let b = a.matvec(&x).unwrap();
        let got = solve(&a, &b, 1e-12).unwrap();
        for (g, e) in got.iter().zip(&x) {
            assert!((g - e).abs() < 1e-14);
        }
        let bt = a.matvec_transpose(&x).unwrap();
        let got = solve_transpose(&a, &bt, 1e-12).unwrap();
        for (g, e) in got.iter().zip(&x) {
            assert!((g - e).abs() < 1e-14);
        }
    }

    #[test]
    fn singular_matrix_is_reported() {
        let l = assemble_laplacian(3, 4).unwrap();
        let a = assemble_system(&[0.0; 12], &l).unwrap();
        assert!(matches!(solve(&a, &[1.0; 12], 1e-10), Err(Error::Singular(_))));
        let z = SparseMatrix::from_triplets(2, 2, &[(0, 0, 1.0)]).unwrap();
        assert!(matches!(BandedLu::factor(&z), Err(Error::Singular(_))));
    }

    #[test]
    fn symmetric_transpose_solve_equals_solve() {
        let l = assemble_laplacian(5, 4).unwrap();
        let a = assemble_system(&[1.0; 20], &l).unwrap();
        // Shifted negative Laplacian is symmetric positive definite.
        let mut t: Vec<_> = (0..20).flat_map(|i| l.row(i).map(move |(j, v)| (i, j, -v))).collect();
        t.extend((0..20).map(|i| (i, i, 0.5)));
        let s = SparseMatrix::from_triplets(20, 20, &t).unwrap();
        let b: Vec<f64> = (0..20).map(|i| (i as f64 * 0.7).cos()).collect();
        let x = solve(&s, &b, 1e-12).unwrap();
        let y = solve_transpose(&s, &b, 1e-12).unwrap();
        for (p, q) in x.iter().zip(&y) {
            assert!((p - q).abs() <= 1e-13, "{p} vs {q}");
        }
        assert_eq!(solve(&a, &b, 1e-12).unwrap(), b);
    }

    #[test]
    fn residual_contract_on_random_masks() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let l = assemble_laplacian(8, 8).unwrap();
        for _ in 0..20 {
            let c: Vec<f64> = (0..64).map(|_| rng.random_range(0.1..1.0)).collect();
            let a = assemble_system(&c, &l).unwrap();
            let b: Vec<f64> = (0..64).map(|_| rng.random_range(-10.0..10.0)).collect();
            let lu = SparseLu::new(a.clone()).unwrap();
            let x = lu.solve(&b, 1e-12).unwrap();
            let r: Vec<f64> = a.matvec(&x).unwrap().iter().zip(&b).map(|(p, q)| p - q).collect();
            assert!(norm(&r) <= 1e-12 * norm(&b));
            let y = lu.solve_transpose(&b, 1e-12).unwrap();
            let r: Vec<f64> = a.matvec_transpose(&y).unwrap().iter().zip(&b).map(|(p, q)| p - q).collect();
            assert!(norm(&r) <= 1e-12 * norm(&b));
        }
    }
}
