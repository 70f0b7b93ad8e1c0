//! Runtime certificates for the convergence theory, the proximal residual
//! and a finite-difference gradient oracle.

mod certificates;
mod trace;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::linalg::norm_inf;
use crate::objective::{Objective, SmoothTerm};

pub use certificates::{
    c1_from_trace, constant_delta_suffix, h_certificates, h_certificates_from, lyapunov_certificate, rate_certificate,
    Certificate, CERT_TOL,
};
pub use trace::{fmt17, TerminalPoint, Trace, TraceRecord};

/// `r(x) = x − (I + ∂g)^{-1}(x − ∇f(x))`; zero exactly at critical points.
pub fn proximal_residual<O: Objective + ?Sized>(x: &[f64], obj: &O) -> Result<Vec<f64>> {
    let grad = obj.smooth_grad(x)?;
    proximal_residual_from_grad(obj, x, &grad)
}

/// [`proximal_residual`] with `∇f(x)` already known.
pub fn proximal_residual_from_grad<O: Objective + ?Sized>(obj: &O, x: &[f64], grad: &[f64]) -> Result<Vec<f64>> {
    let forward: Vec<f64> = x.iter().zip(grad).map(|(a, g)| a - g).collect();
    let p = obj.prox(&forward, 1.0)?;
    Ok(x.iter().zip(&p).map(|(a, b)| a - b).collect())
}

/// Coordinates beyond which [`grad_check`] samples instead of testing all.
pub const GRAD_CHECK_MAX_COORDS: usize = 64;

/// Default central-difference step `10^{-5}(1 + ‖x‖_∞)`.
pub fn default_fd_step(x: &[f64]) -> f64 {
    1e-5 * (1.0 + norm_inf(x))
}

/// Max over tested coordinates of `|fd_i − grad_i| / (1 + |grad_i|)`.
///
/// All coordinates are tested when `x` has at most 64 entries, otherwise 64
/// distinct coordinates drawn with a fixed seed.
pub fn grad_check<V, G>(value: V, grad: G, x: &[f64], h: Option<f64>) -> f64
where
    V: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> Vec<f64>,
{
    let coords: Vec<usize> = if x.len() <= GRAD_CHECK_MAX_COORDS {
        (0..x.len()).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(0x6772_6164);
        let mut c = sample(&mut rng, x.len(), GRAD_CHECK_MAX_COORDS).into_vec();
        c.sort_unstable();
        c
    };
    grad_check_coords(value, grad, x, h, &coords)
}

/// [`grad_check`] on an explicit coordinate list.
pub fn grad_check_coords<V, G>(value: V, grad: G, x: &[f64], h: Option<f64>, coords: &[usize]) -> f64
where
    V: Fn(&[f64]) -> f64,
    G: Fn(&[f64]) -> Vec<f64>,
{
    let h = h.unwrap_or_else(|| default_fd_step(x));
    let g = grad(x);
    let mut xp = x.to_vec();
    let mut worst: f64 = 0.0;
    for &i in coords {
        let xi = x[i];
        xp[i] = xi + h;
        let fp = value(&xp);
        xp[i] = xi - h;
        let fm = value(&xp);
        xp[i] = xi;
        let fd = (fp - fm) / (2.0 * h);
        let err = (fd - g[i]).abs() / (1.0 + g[i].abs());
        worst = if err.is_nan() { f64::INFINITY } else { worst.max(err) };
    }
    worst
}

/// [`grad_check`] for a [`SmoothTerm`]; evaluation errors propagate.
pub fn grad_check_smooth<S: SmoothTerm + ?Sized>(term: &S, x: &[f64], h: Option<f64>) -> Result<f64> {
    term.value_and_gradient(x)?;
    Ok(grad_check(
        |y| term.value(y).unwrap_or(f64::NAN),
        |y| term.gradient(y).unwrap_or_else(|_| vec![f64::NAN; y.len()]),
        x,
        h,
    ))
}
