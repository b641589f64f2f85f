//! Laplace noise and Erlang tail probabilities.

use rand::Rng;

use crate::error::{require_positive, Error, Result};
use crate::rng::{seeded, uniform_centered};

/// Inverse CDF of Laplace(0, `scale`) evaluated at a centred uniform `u` in (-1/2, 1/2).
pub fn laplace_inverse_cdf(u: f64, scale: f64) -> f64 {
    if u == 0.0 {
        return 0.0;
    }
    -scale * u.signum() * (1.0 - 2.0 * u.abs()).ln()
}

/// `count` i.i.d. Laplace(0, `scale`) draws by inverse-CDF transform of the
/// generator's uniform stream (one uniform per draw).
pub fn sample_laplace<R: Rng + ?Sized>(scale: f64, count: usize, rng: &mut R) -> Result<Vec<f64>> {
    require_positive("scale", scale)?;
    Ok((0..count)
        .map(|_| laplace_inverse_cdf(uniform_centered(rng), scale))
        .collect())
}

/// A realised noise vector together with the scale and seed that produced it.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseDraw {
    pub mu: Vec<f64>,
    pub scale: f64,
    pub seed: u64,
}

impl NoiseDraw {
    pub fn sample(scale: f64, count: usize, seed: u64) -> Result<Self> {
        let mu = sample_laplace(scale, count, &mut seeded(seed))?;
        Ok(Self { mu, scale, seed })
    }

    pub fn l1_norm(&self) -> f64 {
        self.mu.iter().map(|v| v.abs()).sum()
    }
}

/// `Pr(X > threshold)` for `X ~ Erlang(q, scale)`:
/// `exp(-x/scale) * sum_{j<q} (x/scale)^j / j!`.
pub fn erlang_tail_probability(q: u32, scale: f64, threshold: f64) -> Result<f64> {
    if q == 0 {
        return Err(Error::param("q", "must be at least 1"));
    }
    require_positive("scale", scale)?;
    if !(threshold >= 0.0) {
        return Err(Error::param("threshold", "must be >= 0"));
    }
    if threshold.is_infinite() {
        return Ok(0.0);
    }
    let z = threshold / scale;
    // Terms computed in log space so large q or z neither overflow nor underflow early.
    let log_z = z.ln();
    let mut log_fact = 0.0;
    let mut sum = 0.0;
    for j in 0..q {
        if j > 0 {
            log_fact += f64::from(j).ln();
        }
        let term = if j == 0 {
            (-z).exp()
        } else {
            (f64::from(j) * log_z - log_fact - z).exp()
        };
        sum += term;
    }
    Ok(sum.clamp(0.0, 1.0))
}
