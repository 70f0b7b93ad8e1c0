use crate::error::{check_len, Result};

/// Default threshold for [`mask_density`].
pub const DEFAULT_DENSITY_EPS: f64 = 1e-8;

/// `1/N Σ (u_i − u0_i)²`; zero for empty images.
pub fn mse(u: &[f64], u0: &[f64]) -> Result<f64> {
    check_len(u0.len(), u.len())?;
    if u.is_empty() {
        return Ok(0.0);
    }
    Ok(u.iter().zip(u0).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / u.len() as f64)
}

/// Fraction of entries with `|c_i| > eps`.
pub fn mask_density(c: &[f64], eps: f64) -> f64 {
    if c.is_empty() {
        return 0.0;
    }
    c.iter().filter(|v| v.abs() > eps).count() as f64 / c.len() as f64
}
