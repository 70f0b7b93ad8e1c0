//! Composite objectives `h = f + g`.
//!
//! `f` is smooth (possibly non-convex) with a Lipschitz gradient and `g` is
//! convex (possibly non-smooth) with an inexpensive proximal map
//! `(I + α∂g)^{-1}(y) = argmin_x ½‖x − y‖² + α g(x)`.

use crate::error::Result;

/// The differentiable part `f` of a composite objective.
pub trait SmoothTerm: Send + Sync {
    fn value(&self, x: &[f64]) -> Result<f64>;

    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>>;

    /// Value and gradient together; override when they share work.
    fn value_and_gradient(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        Ok((self.value(x)?, self.gradient(x)?))
    }
}

/// The convex part `g` of a composite objective.
pub trait ConvexTerm: Send + Sync {
    /// `g(x)`, `+∞` outside the domain.
    fn value(&self, x: &[f64]) -> f64;

    /// Proximal map `(I + α∂g)^{-1}(y)`.
    fn prox(&self, y: &[f64], alpha: f64) -> Result<Vec<f64>>;

    fn description(&self) -> String;
}

/// Everything the solver needs to know about `h = f + g`.
pub trait Objective: Send + Sync {
    fn smooth_value(&self, x: &[f64]) -> Result<f64>;
    fn smooth_grad(&self, x: &[f64]) -> Result<Vec<f64>>;
    fn smooth_value_grad(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        Ok((self.smooth_value(x)?, self.smooth_grad(x)?))
    }
    fn convex_value(&self, x: &[f64]) -> f64;
    fn prox(&self, y: &[f64], alpha: f64) -> Result<Vec<f64>>;

    /// A known lower bound `h̲ ≤ inf h`.
    fn lower_bound(&self) -> f64 {
        0.0
    }

    fn value(&self, x: &[f64]) -> Result<f64> {
        Ok(self.smooth_value(x)? + self.convex_value(x))
    }
}

/// `f + g` assembled from a smooth and a convex term.
#[derive(Debug, Clone)]
pub struct Composite<F, G> {
    pub smooth: F,
    pub convex: G,
    pub lower_bound: f64,
}

impl<F, G> Composite<F, G> {
    pub fn new(smooth: F, convex: G) -> Self {
        Self {
            smooth,
            convex,
            lower_bound: 0.0,
        }
    }

    pub fn with_lower_bound(mut self, lower_bound: f64) -> Self {
        self.lower_bound = lower_bound;
        self
    }
}

impl<F: SmoothTerm, G: ConvexTerm> Objective for Composite<F, G> {
    fn smooth_value(&self, x: &[f64]) -> Result<f64> {
        self.smooth.value(x)
    }

    fn smooth_grad(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.smooth.gradient(x)
    }

    fn smooth_value_grad(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        self.smooth.value_and_gradient(x)
    }

    fn convex_value(&self, x: &[f64]) -> f64 {
        self.convex.value(x)
    }

    fn prox(&self, y: &[f64], alpha: f64) -> Result<Vec<f64>> {
        self.convex.prox(y, alpha)
    }

    fn lower_bound(&self) -> f64 {
        self.lower_bound
    }
}

impl<O: Objective + ?Sized> Objective for &O {
    fn smooth_value(&self, x: &[f64]) -> Result<f64> {
        (**self).smooth_value(x)
    }
    fn smooth_grad(&self, x: &[f64]) -> Result<Vec<f64>> {
        (**self).smooth_grad(x)
    }
    fn smooth_value_grad(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        (**self).smooth_value_grad(x)
    }
    fn convex_value(&self, x: &[f64]) -> f64 {
        (**self).convex_value(x)
    }
    fn prox(&self, y: &[f64], alpha: f64) -> Result<Vec<f64>> {
        (**self).prox(y, alpha)
    }
    fn lower_bound(&self) -> f64 {
        (**self).lower_bound()
    }
}

impl<O: Objective + ?Sized> Objective for Box<O> {
    fn smooth_value(&self, x: &[f64]) -> Result<f64> {
        (**self).smooth_value(x)
    }
    fn smooth_grad(&self, x: &[f64]) -> Result<Vec<f64>> {
        (**self).smooth_grad(x)
    }
    fn smooth_value_grad(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        (**self).smooth_value_grad(x)
    }
    fn convex_value(&self, x: &[f64]) -> f64 {
        (**self).convex_value(x)
    }
    fn prox(&self, y: &[f64], alpha: f64) -> Result<Vec<f64>> {
        (**self).prox(y, alpha)
    }
    fn lower_bound(&self) -> f64 {
        (**self).lower_bound()
    }
}

/// Smooth term built from two closures. Handy for small analytic problems.
pub struct SmoothFn<V, G> {
    value: V,
    grad: G,
}

impl<V, G> SmoothFn<V, G>
where
    V: Fn(&[f64]) -> f64 + Send + Sync,
    G: Fn(&[f64]) -> Vec<f64> + Send + Sync,
{
    pub fn new(value: V, grad: G) -> Self {
        Self { value, grad }
    }
}

impl<V, G> SmoothTerm for SmoothFn<V, G>
where
    V: Fn(&[f64]) -> f64 + Send + Sync,
    G: Fn(&[f64]) -> Vec<f64> + Send + Sync,
{
    fn value(&self, x: &[f64]) -> Result<f64> {
        Ok((self.value)(x))
    }

    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok((self.grad)(x))
    }
}

/// `f ≡ 0`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroSmooth;

impl SmoothTerm for ZeroSmooth {
    fn value(&self, _x: &[f64]) -> Result<f64> {
        Ok(0.0)
    }

    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(vec![0.0; x.len()])
    }
}

/// `f(x) = ½‖x − center‖²` scaled by `weight`.
#[derive(Debug, Clone)]
pub struct Quadratic {
    pub center: Vec<f64>,
    pub weight: f64,
}

impl Quadratic {
    pub fn new(center: Vec<f64>, weight: f64) -> Self {
        Self { center, weight }
    }
}

impl SmoothTerm for Quadratic {
    fn value(&self, x: &[f64]) -> Result<f64> {
        crate::error::check_len(self.center.len(), x.len())?;
        let d = crate::linalg::dist(x, &self.center);
        Ok(0.5 * self.weight * d * d)
    }

    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        crate::error::check_len(self.center.len(), x.len())?;
        Ok(x.iter()
            .zip(&self.center)
            .map(|(a, c)| self.weight * (a - c))
            .collect())
    }
}
