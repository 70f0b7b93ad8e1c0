//! Seeded image corruption on the `[0, 255]` scale.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseSpec {
    /// Additive zero-mean Gaussian noise; values are not clipped.
    Gaussian { sigma: f64 },
    /// `round(fraction·N)` pixels, chosen without replacement, set to 0 or
    /// 255 with equal probability.
    SaltPepper { fraction: f64 },
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            NoiseSpec::Gaussian { sigma } if !(sigma >= 0.0 && sigma.is_finite()) => {
                Err(Error::Config(format!("sigma must be finite and >= 0, got {sigma}")))
            }
            NoiseSpec::SaltPepper { fraction } if !(0.0..=1.0).contains(&fraction) => {
                Err(Error::Config(format!("salt and pepper fraction must lie in [0, 1], got {fraction}")))
            }
            _ => Ok(()),
        }
    }
}

pub fn add_noise(u0: &[f64], spec: NoiseSpec, seed: u64) -> Result<Vec<f64>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut u = u0.to_vec();
    match spec {
        NoiseSpec::Gaussian { sigma } => {
            if sigma > 0.0 {
                let normal = Normal::new(0.0, sigma).map_err(|e| Error::Config(e.to_string()))?;
                for v in &mut u {
                    *v += normal.sample(&mut rng);
                }
            }
        }
        NoiseSpec::SaltPepper { fraction } => {
            let count = salt_pepper_count(u.len(), fraction);
            for i in index::sample(&mut rng, u.len(), count) {
                u[i] = if rng.random_bool(0.5) { 255.0 } else { 0.0 };
            }
        }
    }
    Ok(u)
}

/// Number of pixels corrupted by [`NoiseSpec::SaltPepper`].
pub fn salt_pepper_count(n: usize, fraction: f64) -> usize {
    ((fraction * n as f64).round() as usize).min(n)
}
