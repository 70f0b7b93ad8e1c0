//! Inpainting mask optimization for homogeneous diffusion compression.
//!
//! The mask `c` selects stored pixels; the rest are filled by solving
//! `A u = C u0` with `A = C + (C − I)L`. The energy is
//! `½‖u(c) − u0‖² + λ‖c‖₁`.

use crate::error::{check_len, Error, Result};
use crate::linalg::all_finite;
use crate::objective::{Composite, SmoothTerm};
use crate::prox::L1Norm;
use crate::sparse::{assemble_laplacian, assemble_system, SparseLu, SparseMatrix, DEFAULT_SOLVE_TOL};

use super::metrics::DEFAULT_DENSITY_EPS;

#[derive(Debug, Clone)]
pub struct CompressionModel {
    pub u0: Vec<f64>,
    pub height: usize,
    pub width: usize,
    pub lambda: f64,
    pub laplacian: SparseMatrix,
    pub solver_tol: f64,
}

impl CompressionModel {
    pub fn new(u0: Vec<f64>, height: usize, width: usize, lambda: f64) -> Result<Self> {
        check_len(height * width, u0.len())?;
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::Config(format!("lambda must be finite and >= 0, got {lambda}")));
        }
        Ok(Self {
            laplacian: assemble_laplacian(height, width)?,
            u0,
            height,
            width,
            lambda,
            solver_tol: DEFAULT_SOLVE_TOL,
        })
    }

    pub fn with_solver_tol(mut self, tol: f64) -> Self {
        self.solver_tol = tol;
        self
    }

    pub fn len(&self) -> usize {
        self.u0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u0.is_empty()
    }

    fn factor(&self, c: &[f64]) -> Result<SparseLu> {
        check_len(self.len(), c.len())?;
        if !all_finite(c) {
            return Err(Error::Domain("mask has non-finite entries".into()));
        }
        if c.iter().all(|v| v.abs() <= DEFAULT_DENSITY_EPS) {
            return Err(Error::DegenerateMask("mask is zero everywhere".into()));
        }
        SparseLu::new(assemble_system(c, &self.laplacian)?).map_err(degenerate)
    }

    fn rhs(&self, c: &[f64]) -> Vec<f64> {
        c.iter().zip(&self.u0).map(|(a, b)| a * b).collect()
    }

    /// `u = A⁻¹ C u0`.
    pub fn reconstruct(&self, c: &[f64]) -> Result<Vec<f64>> {
        let lu = self.factor(c)?;
        lu.solve(&self.rhs(c), self.solver_tol).map_err(degenerate)
    }

    /// `(½‖u − u0‖², t ⊙ z)` with `t = u0 − (I + L)u` and `Aᵀz = u − u0`,
    /// both solves sharing one factorization.
    pub fn f_grad(&self, c: &[f64]) -> Result<(f64, Vec<f64>)> {
        let lu = self.factor(c)?;
        let u = lu.solve(&self.rhs(c), self.solver_tol).map_err(degenerate)?;
        let r: Vec<f64> = u.iter().zip(&self.u0).map(|(a, b)| a - b).collect();
        let value = 0.5 * r.iter().map(|v| v * v).sum::<f64>();
        let z = lu.solve_transpose(&r, self.solver_tol).map_err(degenerate)?;
        let lu_u = self.laplacian.matvec(&u)?;
        let grad = (0..u.len())
            .map(|i| (self.u0[i] - u[i] - lu_u[i]) * z[i])
            .collect();
        Ok((value, grad))
    }

    /// `f + λ‖c‖₁`.
    pub fn objective(&self) -> Composite<CompressionModel, L1Norm> {
        Composite::new(self.clone(), L1Norm::new(self.lambda))
    }

    /// Starting mask `c = 1`, where `u = u0` and the energy is `λN`.
    pub fn initial_mask(&self) -> Vec<f64> {
        vec![1.0; self.len()]
    }
}

impl SmoothTerm for CompressionModel {
    fn value(&self, c: &[f64]) -> Result<f64> {
        let u = self.reconstruct(c)?;
        Ok(0.5 * u.iter().zip(&self.u0).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
    }

    fn gradient(&self, c: &[f64]) -> Result<Vec<f64>> {
        Ok(self.f_grad(c)?.1)
    }

    fn value_and_gradient(&self, c: &[f64]) -> Result<(f64, Vec<f64>)> {
        self.f_grad(c)
    }
}

fn degenerate(e: Error) -> Error {
    match e {
        Error::Singular(msg) => Error::DegenerateMask(msg),
        other => other,
    }
}

/// [`CompressionModel::reconstruct`] as a free function.
pub fn compression_reconstruct(c: &[f64], model: &CompressionModel) -> Result<Vec<f64>> {
    model.reconstruct(c)
}

/// [`CompressionModel::f_grad`] as a free function.
pub fn compression_f_grad(c: &[f64], model: &CompressionModel) -> Result<(f64, Vec<f64>)> {
    model.f_grad(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::grad_check;
    use crate::linalg::norm;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn smooth_image(h: usize, w: usize) -> Vec<f64> {
        (0..h * w)
            .map(|p| {
                let (i, j) = ((p / w) as f64, (p % w) as f64);
                128.0 + 60.0 * (0.4 * i).sin() + 40.0 * (0.3 * j).cos() + if i > j { 30.0 } else { 0.0 }
            })
            .collect()
    }

    fn random_mask(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.random_range(0.1..1.0)).collect()
    }

    /// Dense Gaussian elimination with partial pivoting, solving `A X = B` column-wise.
    fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
        let n = a.len();
        for k in 0..n {
            let p = (k..n).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs())).unwrap();
            a.swap(k, p);
            b.swap(k, p);
            for i in k + 1..n {
                let m = a[i][k] / a[k][k];
                for j in k..n {
                    a[i][j] -= m * a[k][j];
                }
                for j in 0..b[i].len() {
                    b[i][j] -= m * b[k][j];
                }
            }
        }
        for k in (0..n).rev() {
            for j in 0..b[k].len() {
                let s: f64 = (k + 1..n).map(|i| a[k][i] * b[i][j]).sum();
                b[k][j] = (b[k][j] - s) / a[k][k];
            }
        }
        b
    }

    #[test]
    fn full_mask_reconstructs_exactly() {
        let m = CompressionModel::new(smooth_image(6, 5), 6, 5, 0.1).unwrap();
        assert_eq!(m.reconstruct(&m.initial_mask()).unwrap(), m.u0);
        let (v, g) = m.f_grad(&m.initial_mask()).unwrap();
        assert_eq!(v, 0.0);
        assert!(g.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn boundary_mask_preserves_constants() {
        let (h, w) = (7, 9);
        let m = CompressionModel::new(vec![42.0; h * w], h, w, 0.1).unwrap();
        let c: Vec<f64> = (0..h * w)
            .map(|p| {
                let (i, j) = (p / w, p % w);
                if i == 0 || j == 0 || i == h - 1 || j == w - 1 { 1.0 } else { 0.0 }
            })
            .collect();
        let u = m.reconstruct(&c).unwrap();
        assert!(u.iter().all(|v| (v - 42.0).abs() < 1e-9), "{u:?}");
    }

    #[test]
    fn reconstruction_matches_dense_oracle() {
        let m = CompressionModel::new(smooth_image(8, 8), 8, 8, 0.1).unwrap();
        for seed in 0..5 {
            let c = random_mask(64, seed);
            let u = m.reconstruct(&c).unwrap();
            let a = assemble_system(&c, &m.laplacian).unwrap();
            let cu0 = m.rhs(&c);
            let res: Vec<f64> = a.matvec(&u).unwrap().iter().zip(&cu0).map(|(p, q)| p - q).collect();
            assert!(norm(&res) <= m.solver_tol * norm(&cu0));
            let dense = dense_solve(a.to_dense(), cu0.iter().map(|&v| vec![v]).collect());
            for (p, q) in u.iter().zip(&dense) {
                assert!((p - q[0]).abs() <= 1e-8, "{p} vs {}", q[0]);
            }
        }
    }

    #[test]
    fn gradient_matches_dense_adjoint_form() {
        let m = CompressionModel::new(smooth_image(8, 8), 8, 8, 0.1).unwrap();
        let c = random_mask(64, 21);
        let (_, g) = m.f_grad(&c).unwrap();
        let u = m.reconstruct(&c).unwrap();
        let lu_u = m.laplacian.matvec(&u).unwrap();
        let t: Vec<f64> = (0..64).map(|i| m.u0[i] - u[i] - lu_u[i]).collect();
        // M = A⁻¹ diag(t); gradient = Mᵀ(u − u0).
        let diag_t: Vec<Vec<f64>> = (0..64).map(|i| (0..64).map(|j| if i == j { t[i] } else { 0.0 }).collect()).collect();
        let a = assemble_system(&c, &m.laplacian).unwrap();
        let mm = dense_solve(a.to_dense(), diag_t);
        for j in 0..64 {
            let e: f64 = (0..64).map(|i| mm[i][j] * (u[i] - m.u0[i])).sum();
            assert!((g[j] - e).abs() <= 1e-8 * (1.0 + e.abs()), "{j}: {} vs {e}", g[j]);
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let m = CompressionModel::new(smooth_image(16, 16), 16, 16, 0.1).unwrap();
        let c = random_mask(256, 3);
        let err = grad_check(|x| m.value(x).unwrap(), |x| m.gradient(x).unwrap(), &c, None);
        assert!(err <= 1e-4, "{err}");
    }

    #[test]
    fn degenerate_masks() {
        let m = CompressionModel::new(smooth_image(4, 4), 4, 4, 0.1).unwrap();
        assert!(matches!(m.reconstruct(&[0.0; 16]), Err(Error::DegenerateMask(_))));
        assert!(matches!(m.f_grad(&[1e-12; 16]), Err(Error::DegenerateMask(_))));
        assert!(m.reconstruct(&[1.0; 3]).is_err());
        assert!(CompressionModel::new(vec![0.0; 3], 2, 2, 0.1).is_err());
    }
}
