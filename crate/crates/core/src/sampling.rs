//! Reproducible random streams.
//!
//! Each replication owns a ChaCha8 generator keyed by the run seed with the
//! replication index as its stream number, so draws never depend on thread
//! scheduling. Gaussian variates come from inverting the normal CDF.

use rand::distributions::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::specfun::gauss_quantile_unchecked;

/// The generator for replication `rep` of a run seeded with `seed`.
pub fn substream(seed: u64, rep: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep);
    rng
}

/// A uniform draw on the open interval (0, 1).
pub fn open_uniform<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(Open01)
}

pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    gauss_quantile_unchecked(open_uniform(rng))
}

/// Synthetic data-generating distributions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "dist", rename_all = "kebab-case")]
pub enum Distribution {
    Normal { mu: f64, sigma: f64 },
    /// Uniform on [mu - half_width, mu + half_width].
    UniformShifted { mu: f64, half_width: f64 },
}

impl Distribution {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::Normal { mu, sigma } => {
                if !mu.is_finite() || !(sigma > 0.0) || !sigma.is_finite() {
                    return Err(Error::domain("normal distribution needs finite mu and sigma > 0"));
                }
            }
            Self::UniformShifted { mu, half_width } => {
                if !mu.is_finite() || !(half_width > 0.0) || !half_width.is_finite() {
                    return Err(Error::domain("uniform distribution needs finite mu and half_width > 0"));
                }
            }
        }
        Ok(())
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Self::Normal { mu, .. } | Self::UniformShifted { mu, .. } => mu,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Self::Normal { mu, sigma } => mu + sigma * standard_normal(rng),
            Self::UniformShifted { mu, half_width } => {
                mu + half_width * (2.0 * open_uniform(rng) - 1.0)
            }
        }
    }
}
