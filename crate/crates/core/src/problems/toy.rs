//! `h(x) = ½ Σ log(1 + μ(x_i − u0_i)²) + λ‖x‖₁`, a separable non-convex
//! problem with several stationary points per coordinate.

use crate::error::{check_len, Error, Result};
use crate::objective::{Composite, SmoothTerm};
use crate::prox::L1Norm;

#[derive(Debug, Clone, PartialEq)]
pub struct ToyProblem {
    pub u0: Vec<f64>,
    pub mu: f64,
    pub lambda: f64,
}

impl Default for ToyProblem {
    /// `u0 = (1, 1)`, `μ = 100`, `λ = 1`.
    fn default() -> Self {
        Self {
            u0: vec![1.0, 1.0],
            mu: 100.0,
            lambda: 1.0,
        }
    }
}

/// The smooth part `f` of [`ToyProblem`].
#[derive(Debug, Clone, PartialEq)]
pub struct ToySmooth {
    pub u0: Vec<f64>,
    pub mu: f64,
}

impl SmoothTerm for ToySmooth {
    fn value(&self, x: &[f64]) -> Result<f64> {
        check_len(self.u0.len(), x.len())?;
        Ok(0.5
            * x.iter()
                .zip(&self.u0)
                .map(|(a, b)| (self.mu * (a - b) * (a - b)).ln_1p())
                .sum::<f64>())
    }

    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(self.u0.len(), x.len())?;
        Ok(x.iter()
            .zip(&self.u0)
            .map(|(a, b)| {
                let s = a - b;
                self.mu * s / (1.0 + self.mu * s * s)
            })
            .collect())
    }
}

impl ToyProblem {
    pub fn new(u0: Vec<f64>, mu: f64, lambda: f64) -> Result<Self> {
        if !(mu > 0.0 && mu.is_finite()) || !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::Config(format!("mu and lambda must be > 0, got {mu}, {lambda}")));
        }
        Ok(Self { u0, mu, lambda })
    }

    pub fn dim(&self) -> usize {
        self.u0.len()
    }

    /// Lipschitz constant of `∇f`: `max_s |μ(1 − μs²)/(1 + μs²)²| = μ`.
    pub fn lipschitz(&self) -> f64 {
        self.mu
    }

    pub fn smooth(&self) -> ToySmooth {
        ToySmooth {
            u0: self.u0.clone(),
            mu: self.mu,
        }
    }

    pub fn objective(&self) -> Composite<ToySmooth, L1Norm> {
        Composite::new(self.smooth(), L1Norm::new(self.lambda))
    }

    pub fn f_grad(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        self.smooth().value_and_gradient(x)
    }

    pub fn energy(&self, x: &[f64]) -> Result<f64> {
        let f = self.smooth().value(x)?;
        Ok(f + self.lambda * x.iter().map(|v| v.abs()).sum::<f64>())
    }

    /// One-dimensional energy `½ log(1 + μ(t − u0_i)²) + λ|t|`.
    pub fn coordinate_energy(&self, i: usize, t: f64) -> f64 {
        let s = t - self.u0[i];
        0.5 * (self.mu * s * s).ln_1p() + self.lambda * t.abs()
    }

    /// All stationary points of coordinate `i`, ascending.
    ///
    /// For `t ≠ 0` stationarity reads `μs/(1 + μs²) + λ sgn(t) = 0` with
    /// `s = t − u0_i`, i.e. `λμs² ± μs + λ = 0`; `t = 0` is stationary when
    /// `|f'(0)| ≤ λ`.
    pub fn coordinate_stationary_points(&self, i: usize) -> Vec<f64> {
        let (mu, lam, u) = (self.mu, self.lambda, self.u0[i]);
        let mut pts = Vec::new();
        let fprime0 = -mu * u / (1.0 + mu * u * u);
        if fprime0.abs() <= lam {
            pts.push(0.0);
        }
        for sign in [1.0, -1.0] {
            // λμs² + sign·μs + λ = 0; the branch t > 0 uses sign = +1.
            for s in quadratic_roots(lam * mu, sign * mu, lam) {
                let t = u + s;
                if (sign > 0.0 && t > 0.0) || (sign < 0.0 && t < 0.0) {
                    pts.push(t);
                }
            }
        }
        pts.sort_by(f64::total_cmp);
        pts
    }

    /// Local minimizers of coordinate `i`: `0` when `|f'(0)| < λ`, and the
    /// nonzero roots where `φ'' > 0` (`μs² < 1`).
    pub fn coordinate_minimizers(&self, i: usize) -> Vec<f64> {
        let (mu, lam, u) = (self.mu, self.lambda, self.u0[i]);
        self.coordinate_stationary_points(i)
            .into_iter()
            .filter(|&t| {
                if t == 0.0 {
                    (mu * u / (1.0 + mu * u * u)).abs() < lam
                } else {
                    mu * (t - u) * (t - u) < 1.0
                }
            })
            .collect()
    }

    /// Local minimizers of `h`: the Cartesian product of the coordinate
    /// minimizers (four points for the default problem).
    pub fn stationary_points(&self) -> Vec<Vec<f64>> {
        self.product((0..self.dim()).map(|i| self.coordinate_minimizers(i)).collect())
    }

    /// Every stationary point of `h`, including saddles and maxima.
    pub fn all_stationary_points(&self) -> Vec<Vec<f64>> {
        self.product((0..self.dim()).map(|i| self.coordinate_stationary_points(i)).collect())
    }

    fn product(&self, per_coord: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
        per_coord.into_iter().fold(vec![Vec::new()], |acc, pts| {
            acc.into_iter()
                .flat_map(|prefix| {
                    pts.iter().map(move |&t| {
                        let mut p = prefix.clone();
                        p.push(t);
                        p
                    })
                })
                .collect()
        })
    }

    /// The stationary point of lowest energy.
    pub fn global_minimizer(&self) -> Vec<f64> {
        (0..self.dim())
            .map(|i| {
                self.coordinate_minimizers(i)
                    .into_iter()
                    .min_by(|a, b| self.coordinate_energy(i, *a).total_cmp(&self.coordinate_energy(i, *b)))
                    .unwrap_or(0.0)
            })
            .collect()
    }
}

/// `(value, gradient)` of the toy problem's smooth part.
pub fn toy_f_grad(x: &[f64], prob: &ToyProblem) -> Result<(f64, Vec<f64>)> {
    prob.f_grad(x)
}

/// Real roots of `ax² + bx + c` (a ≠ 0), ascending, in the cancellation-free form.
fn quadratic_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return Vec::new();
    }
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    let mut r = vec![q / a, c / q];
    r.sort_by(f64::total_cmp);
    r.dedup();
    r
}
