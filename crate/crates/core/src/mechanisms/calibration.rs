//! Closed-form noise and dimension calibration, and the upper and lower bounds
//! on the best privacy level any accurate mechanism can reach.
//!
//! Loss-generic formulas take the Lipschitz constant `L` explicitly; the
//! `*_hinge` variants fix `L = 1` and bound the dual L1 norm by `C`.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::error::{require_positive, require_unit_open, Error, Result};
use crate::rff::{ceil_to_dim, finite_sigma_p};

/// Upper end of the RBF bandwidth range for which the packing lower bound
/// applies: `sqrt(1 / (2 ln 2)) ≈ 0.8493`.
pub fn rbf_packing_sigma_ceiling() -> f64 {
    (1.0 / (2.0 * LN_2)).sqrt()
}

fn require_n(n: usize) -> Result<f64> {
    if n > 1 {
        Ok(n as f64)
    } else {
        Err(Error::param("n", format!("must exceed 1, got {n}")))
    }
}

fn require_count(name: &'static str, v: usize) -> Result<f64> {
    if v >= 1 {
        Ok(v as f64)
    } else {
        Err(Error::param(name, "must be at least 1"))
    }
}

/// L1 sensitivity of the primal weight vector across neighbouring databases:
/// `4 L C κ √F / n`, where `κ² ≥ k(x, x)` on the data domain.
pub fn sensitivity_bound(lipschitz: f64, c: f64, kappa: f64, features: usize, n: usize) -> Result<f64> {
    require_positive("L", lipschitz)?;
    require_positive("C", c)?;
    require_positive("kappa", kappa)?;
    let f = require_count("F", features)?;
    let n = require_n(n)?;
    Ok(4.0 * lipschitz * c * kappa * f.sqrt() / n)
}

/// Smallest Laplace scale giving β-differential privacy for a finite feature
/// map: `4 L C κ √F / (β n)`.
pub fn calibrate_noise_privacy_finite(
    lipschitz: f64,
    c: f64,
    kappa: f64,
    features: usize,
    beta: f64,
    n: usize,
) -> Result<f64> {
    require_positive("beta", beta)?;
    Ok(sensitivity_bound(lipschitz, c, kappa, features, n)? / beta)
}

/// Smallest Laplace scale giving β-differential privacy with `d̂` random
/// Fourier features: `2^{2.5} L C √d̂ / (β n)`. Uses `κ = 1` and `F = 2d̂`.
pub fn calibrate_noise_privacy_rff(
    lipschitz: f64,
    c: f64,
    d_hat: usize,
    beta: f64,
    n: usize,
) -> Result<f64> {
    require_positive("L", lipschitz)?;
    require_positive("C", c)?;
    require_positive("beta", beta)?;
    let d_hat = require_count("d_hat", d_hat)?;
    let n = require_n(n)?;
    Ok(2f64.powf(2.5) * lipschitz * c * d_hat.sqrt() / (beta * n))
}

/// Largest Laplace scale keeping the released finite-map classifier within
/// `eps` of the exact one in sup-norm with probability `1 - delta`:
/// `ε / (2Φ (F ln 2 + ln(1/δ)))`, with `Φ` bounding every feature coordinate.
pub fn calibrate_noise_utility_finite(eps: f64, delta: f64, phi: f64, features: usize) -> Result<f64> {
    require_positive("eps", eps)?;
    require_unit_open("delta", delta)?;
    require_positive("Phi", phi)?;
    let f = require_count("F", features)?;
    Ok(eps / (2.0 * phi * (f * LN_2 + (1.0 / delta).ln())))
}

/// Largest Laplace scale keeping the noisy random-feature classifier within
/// `eps/2` of the noiseless one with probability `1 - delta/2`:
/// `min{ ε / (2⁴ ln2 √d̂), ε √d̂ / (8 ln(2/δ)) }`.
pub fn calibrate_noise_utility_rff(eps: f64, delta: f64, d_hat: usize) -> Result<f64> {
    require_positive("eps", eps)?;
    require_unit_open("delta", delta)?;
    let root = require_count("d_hat", d_hat)?.sqrt();
    let first = eps / (16.0 * LN_2 * root);
    let second = eps * root / (8.0 * (2.0 / delta).ln());
    Ok(first.min(second))
}

/// `θ(ε) = min{1, ε⁴ / (2¹² C⁴)}` for hinge loss.
pub fn hinge_theta(eps: f64, c: f64) -> Result<f64> {
    require_positive("eps", eps)?;
    require_positive("C", c)?;
    Ok((eps.powi(4) / (4096.0 * c.powi(4))).min(1.0))
}

/// Random-feature dimension making the private hinge-loss mechanism
/// (ε, δ)-useful with respect to the exact kernel SVM:
/// `⌈ 4(d+2)/θ · ln(2⁹ (σ_p diam)² / (δ θ)) ⌉` with `θ = hinge_theta(ε, C)`.
pub fn calibrate_rff_dim_hinge(
    eps: f64,
    delta: f64,
    c: f64,
    dim: usize,
    sigma_p: Option<f64>,
    diam: f64,
) -> Result<usize> {
    let sigma_p = finite_sigma_p(sigma_p)?;
    require_unit_open("delta", delta)?;
    require_positive("diam", diam)?;
    let d = require_count("dim", dim)?;
    let theta = hinge_theta(eps, c)?;
    let arg = 512.0 * (sigma_p * diam).powi(2) / (delta * theta);
    Ok(ceil_to_dim(4.0 * (d + 2.0) / theta * arg.ln()))
}

/// Outcome of combining a privacy requirement (lower bound on λ) with a
/// utility requirement (upper bound on λ).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub lambda_min_privacy: f64,
    pub lambda_max_utility: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub d_hat: Option<usize>,
    pub feasible: bool,
    /// Smallest β whose privacy requirement fits under the utility bound.
    pub beta_achievable: f64,
}

impl CalibrationReport {
    fn new(lambda_min: f64, lambda_max: f64, d_hat: Option<usize>, beta_achievable: f64) -> Self {
        Self {
            lambda_min_privacy: lambda_min,
            lambda_max_utility: lambda_max,
            d_hat,
            feasible: lambda_min <= lambda_max,
            beta_achievable,
        }
    }
}

/// Privacy/utility window for the finite identity-map mechanism with hinge loss.
#[allow(clippy::too_many_arguments)]
pub fn calibrate_finite_hinge(
    c: f64,
    kappa: f64,
    phi: f64,
    features: usize,
    n: usize,
    beta: f64,
    eps: f64,
    delta: f64,
) -> Result<CalibrationReport> {
    let lambda_min = calibrate_noise_privacy_finite(1.0, c, kappa, features, beta, n)?;
    let lambda_max = calibrate_noise_utility_finite(eps, delta, phi, features)?;
    let beta_achievable = sensitivity_bound(1.0, c, kappa, features, n)? / lambda_max;
    Ok(CalibrationReport::new(lambda_min, lambda_max, None, beta_achievable))
}

/// Privacy/utility window for the random-feature mechanism with hinge loss at
/// a given `d̂`. The utility side only covers the noise term; the kernel
/// approximation error is governed by `d̂` (see [`calibrate_rff_dim_hinge`]).
pub fn calibrate_rff_hinge(
    c: f64,
    d_hat: usize,
    n: usize,
    beta: f64,
    eps: f64,
    delta: f64,
) -> Result<CalibrationReport> {
    let lambda_min = calibrate_noise_privacy_rff(1.0, c, d_hat, beta, n)?;
    let lambda_max = calibrate_noise_utility_rff(eps, delta, d_hat)?;
    let beta_achievable = calibrate_noise_privacy_rff(1.0, c, d_hat, 1.0, n)? / lambda_max;
    Ok(CalibrationReport::new(lambda_min, lambda_max, Some(d_hat), beta_achievable))
}

/// Concrete upper bound on the optimal privacy level for hinge-loss SVM with a
/// translation-invariant kernel: take `d̂` from [`calibrate_rff_dim_hinge`],
/// the largest utility-preserving λ, and report the β that λ buys,
/// `2^{2.5} C √d̂ / (λ n)`. The window is feasible by construction.
pub fn optimal_dp_upper_bound_hinge(
    eps: f64,
    delta: f64,
    c: f64,
    n: usize,
    dim: usize,
    sigma_p: Option<f64>,
    diam: f64,
) -> Result<CalibrationReport> {
    let d_hat = calibrate_rff_dim_hinge(eps, delta, c, dim, sigma_p, diam)?;
    let lambda_max = calibrate_noise_utility_rff(eps, delta, d_hat)?;
    let beta = calibrate_noise_privacy_rff(1.0, c, d_hat, 1.0, n)? / lambda_max;
    Ok(CalibrationReport {
        lambda_min_privacy: lambda_max,
        lambda_max_utility: lambda_max,
        d_hat: Some(d_hat),
        feasible: true,
        beta_achievable: beta,
    })
}

/// Lower bound `ln((1-δ)/δ)` on the privacy level of any (ε, δ)-useful
/// mechanism for linear-kernel hinge SVM (small ε).
pub fn optimal_dp_lower_bound_linear(delta: f64) -> Result<f64> {
    require_unit_open("delta", delta)?;
    Ok(((1.0 - delta) / delta).ln())
}

/// Number of pairwise-neighbouring databases in the RBF packing construction:
/// `N = ⌊(2/σ) √(2 / ln 2)⌋`.
pub fn rbf_packing_size(sigma: f64) -> Result<usize> {
    require_positive("sigma", sigma)?;
    let ceiling = rbf_packing_sigma_ceiling();
    if sigma >= ceiling {
        return Err(Error::param(
            "sigma",
            format!("must be below sqrt(1/(2 ln 2)) = {ceiling:.4}, got {sigma}"),
        ));
    }
    Ok(((2.0 / sigma) * (2.0 / LN_2).sqrt()).floor() as usize)
}

/// Lower bound `ln((1-δ)(N-1)/δ)` for RBF-kernel hinge SVM, with `N` from
/// [`rbf_packing_size`]. Returns `(N, bound)`.
pub fn optimal_dp_lower_bound_rbf(delta: f64, sigma: f64) -> Result<(usize, f64)> {
    require_unit_open("delta", delta)?;
    let big_n = rbf_packing_size(sigma)?;
    let bound = ((1.0 - delta) * (big_n as f64 - 1.0) / delta).ln();
    Ok((big_n, bound))
}
