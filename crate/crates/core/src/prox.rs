//! Convex terms with closed-form proximal maps.
//!
//! All maps act componentwise and are pure functions of their inputs.

use crate::error::{check_len, Error, Result};
use crate::objective::ConvexTerm;

/// Sign with `sgn(0) = 0`.
fn sgn(t: f64) -> f64 {
    if t > 0.0 {
        1.0
    } else if t < 0.0 {
        -1.0
    } else {
        0.0
    }
}

#[inline]
fn shrink(y: f64, tau: f64) -> f64 {
    (y.abs() - tau).max(0.0) * sgn(y)
}

fn check_threshold(tau: f64) -> Result<()> {
    if tau >= 0.0 && tau.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("threshold must be finite and >= 0, got {tau}")))
    }
}

/// Soft shrinkage `max(0, |y| − τ)·sgn(y)`.
pub fn prox_l1(y: &[f64], tau: f64) -> Result<Vec<f64>> {
    check_threshold(tau)?;
    Ok(y.iter().map(|&v| shrink(v, tau)).collect())
}

/// Prox of `(λ/2)‖u − u0‖²` with step α: `(û + αλ u0) / (1 + αλ)`.
pub fn prox_weighted_quadratic(y_hat: &[f64], u0: &[f64], alpha_lambda: f64) -> Result<Vec<f64>> {
    check_len(u0.len(), y_hat.len())?;
    check_threshold(alpha_lambda)?;
    let denom = 1.0 + alpha_lambda;
    Ok(y_hat
        .iter()
        .zip(u0)
        .map(|(&y, &u)| (y + alpha_lambda * u) / denom)
        .collect())
}

/// Prox of `λ‖u − u0‖₁` with step α: shrink `û − u0` by `τ = αλ`, shift back.
pub fn prox_shifted_l1(y_hat: &[f64], u0: &[f64], tau: f64) -> Result<Vec<f64>> {
    check_len(u0.len(), y_hat.len())?;
    check_threshold(tau)?;
    Ok(y_hat
        .iter()
        .zip(u0)
        .map(|(&y, &u)| shrink(y - u, tau) + u)
        .collect())
}

/// Prox of `g ≡ 0`: the identity.
pub fn prox_zero(y: &[f64], _alpha: f64) -> Vec<f64> {
    y.to_vec()
}

fn check_step(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("prox step must be finite and > 0, got {alpha}")))
    }
}

/// `g ≡ 0`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Zero;

impl ConvexTerm for Zero {
    fn value(&self, _x: &[f64]) -> f64 {
        0.0
    }

    fn prox(&self, y: &[f64], alpha: f64) -> Result<Vec<f64>> {
        check_step(alpha)?;
        Ok(prox_zero(y, alpha))
    }

    fn description(&self) -> String {
        "zero".into()
    }
}

/// `g(x) = λ‖x‖₁`.
#[derive(Debug, Clone, Copy)]
pub struct L1Norm {
    pub lambda: f64,
}

impl L1Norm {
    pub fn new(lambda: f64) -> Self {
        Self { lambda }
    }
}

impl ConvexTerm for L1Norm {
    fn value(&self, x: &[f64]) -> f64 {
        self.lambda * x.iter().map(|v| v.abs()).sum::<f64>()
    }

    fn prox(&self, y: &[f64], alpha: f64) -> Result<Vec<f64>> {
        check_step(alpha)?;
        prox_l1(y, alpha * self.lambda)
    }

    fn description(&self) -> String {
        format!("l1(lambda={})", self.lambda)
    }
}

/// `g(u) = (λ/2)‖u − u0‖²`, the Gaussian-noise data term.
#[derive(Debug, Clone)]
pub struct WeightedQuadratic {
    pub u0: Vec<f64>,
    pub lambda: f64,
}

impl WeightedQuadratic {
    pub fn new(u0: Vec<f64>, lambda: f64) -> Self {
        Self { u0, lambda }
    }
}

impl ConvexTerm for WeightedQuadratic {
    fn value(&self, x: &[f64]) -> f64 {
        let d = crate::linalg::dist(x, &self.u0);
        0.5 * self.lambda * d * d
    }

    fn prox(&self, y: &[f64], alpha: f64) -> Result<Vec<f64>> {
        check_step(alpha)?;
        prox_weighted_quadratic(y, &self.u0, alpha * self.lambda)
    }

    fn description(&self) -> String {
        format!("weighted-quadratic(lambda={})", self.lambda)
    }
}

/// `g(u) = λ‖u − u0‖₁`, the impulse-noise data term.
#[derive(Debug, Clone)]
pub struct ShiftedL1 {
    pub u0: Vec<f64>,
    pub lambda: f64,
}

impl ShiftedL1 {
    pub fn new(u0: Vec<f64>, lambda: f64) -> Self {
        Self { u0, lambda }
    }
}

impl ConvexTerm for ShiftedL1 {
    fn value(&self, x: &[f64]) -> f64 {
        self.lambda
            * x.iter()
                .zip(&self.u0)
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>()
    }

    fn prox(&self, y: &[f64], alpha: f64) -> Result<Vec<f64>> {
        check_step(alpha)?;
        prox_shifted_l1(y, &self.u0, alpha * self.lambda)
    }

    fn description(&self) -> String {
        format!("shifted-l1(lambda={})", self.lambda)
    }
}
