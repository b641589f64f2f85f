//! Random Fourier feature maps for translation-invariant kernels.
//!
//! A map holds `d̂` spectral vectors `ρ₁..ρ_d̂` and sends `x` to
//! `d̂^{-1/2} [cos⟨ρ₁,x⟩, sin⟨ρ₁,x⟩, …, cos⟨ρ_d̂,x⟩, sin⟨ρ_d̂,x⟩]`, so that
//! inner products of features approximate the source kernel and every
//! feature vector has unit Euclidean norm.

use crate::error::{require_dim, require_positive, require_unit_open, Error, Result};
use crate::kernels::{Kernel, KernelSpec};
use crate::rng::seeded;

#[derive(Clone, Debug, PartialEq)]
pub struct RandomFeatureMap {
    omegas: Vec<Vec<f64>>,
    source_kernel: KernelSpec,
    seed: u64,
}

impl RandomFeatureMap {
    /// Draws `d_hat` spectral vectors in `R^dim` from a generator seeded with `seed`.
    /// The same arguments always rebuild the same map bit-for-bit.
    pub fn sample(kernel: KernelSpec, dim: usize, d_hat: usize, seed: u64) -> Result<Self> {
        if d_hat == 0 {
            return Err(Error::param("d_hat", "must be at least 1"));
        }
        let omegas = kernel.sample_spectral(dim, d_hat, &mut seeded(seed))?;
        Ok(Self {
            omegas,
            source_kernel: kernel,
            seed,
        })
    }

    /// Reassembles a map from stored spectral vectors (e.g. a model file).
    pub fn from_parts(kernel: KernelSpec, omegas: Vec<Vec<f64>>, seed: u64) -> Result<Self> {
        if !kernel.translation_invariant() {
            return Err(Error::UnsupportedKernel {
                family: kernel.name(),
                operation: "random features",
            });
        }
        let dim = omegas
            .first()
            .map(Vec::len)
            .ok_or_else(|| Error::param("omegas", "need at least one spectral vector"))?;
        if dim == 0 {
            return Err(Error::param("omegas", "spectral vectors must be non-empty"));
        }
        for w in &omegas {
            require_dim(dim, w.len())?;
            if w.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("spectral vectors"));
            }
        }
        Ok(Self {
            omegas,
            source_kernel: kernel,
            seed,
        })
    }

    pub fn omegas(&self) -> &[Vec<f64>] {
        &self.omegas
    }

    pub fn source_kernel(&self) -> KernelSpec {
        self.source_kernel
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// `d̂`, the number of spectral vectors.
    pub fn d_hat(&self) -> usize {
        self.omegas.len()
    }

    pub fn input_dim(&self) -> usize {
        self.omegas[0].len()
    }

    /// Length of a feature vector, `2 d̂`.
    pub fn feature_dim(&self) -> usize {
        2 * self.omegas.len()
    }

    pub fn features(&self, x: &[f64]) -> Result<Vec<f64>> {
        require_dim(self.input_dim(), x.len())?;
        Ok(self.features_unchecked(x))
    }

    pub(crate) fn features_unchecked(&self, x: &[f64]) -> Vec<f64> {
        let scale = 1.0 / (self.d_hat() as f64).sqrt();
        let mut out = Vec::with_capacity(self.feature_dim());
        for w in &self.omegas {
            let (s, c) = dot(w, x).sin_cos();
            out.push(scale * c);
            out.push(scale * s);
        }
        out
    }

    /// `k̂(x, y) = (1/d̂) Σᵢ cos⟨ρᵢ, x - y⟩`, which equals the inner product of
    /// the two feature vectors.
    pub fn approx_kernel(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        require_dim(self.input_dim(), x.len())?;
        require_dim(self.input_dim(), y.len())?;
        let delta: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
        Ok(self.approx_profile(&delta))
    }

    /// `k̂` as a function of the displacement `Δ = x - y`.
    pub(crate) fn approx_profile(&self, delta: &[f64]) -> f64 {
        let sum: f64 = self.omegas.iter().map(|w| dot(w, delta).cos()).sum();
        sum / self.d_hat() as f64
    }
}

impl Kernel for RandomFeatureMap {
    fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.approx_kernel(x, y)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| u * v).sum()
}

/// Smallest `d̂` with `d̂ ≥ 4(d+2)/ε² · ln(2⁸ (σ_p diam)² / (δ ε²))`, the number of
/// random features that makes `sup |k̂ - k| < ε` hold with probability at least
/// `1 - δ` over a domain of the given diameter.
///
/// `sigma_p` is the square root of the spectral second moment; pass `None`
/// for kernels where it diverges (Laplacian), which yields an error since the
/// dimension then has to be chosen by hand.
pub fn calibrate_rff_dim(
    eps: f64,
    delta: f64,
    dim: usize,
    sigma_p: Option<f64>,
    diam: f64,
) -> Result<usize> {
    let sigma_p = finite_sigma_p(sigma_p)?;
    require_positive("eps", eps)?;
    require_unit_open("delta", delta)?;
    require_positive("diam", diam)?;
    if dim == 0 {
        return Err(Error::param("dim", "must be at least 1"));
    }
    let d = dim as f64;
    let arg = 256.0 * (sigma_p * diam).powi(2) / (delta * eps * eps);
    let bound = 4.0 * (d + 2.0) / (eps * eps) * arg.ln();
    Ok(ceil_to_dim(bound))
}

pub(crate) fn finite_sigma_p(sigma_p: Option<f64>) -> Result<f64> {
    match sigma_p {
        Some(s) if s.is_finite() && s > 0.0 => Ok(s),
        Some(s) => Err(Error::param("sigma_p", format!("must be finite and > 0, got {s}"))),
        None => Err(Error::CalibrationUnsupported(
            "spectral second moment is infinite for this kernel; choose d_hat manually".into(),
        )),
    }
}

/// Ceiling of a real-valued lower bound on `d̂`, at least 1.
pub(crate) fn ceil_to_dim(bound: f64) -> usize {
    if bound <= 1.0 {
        1
    } else {
        bound.ceil() as usize
    }
}

/// The failure probability `δ` for which `d_hat` features meet the uniform
/// approximation bound at accuracy `eps`; may exceed 1, meaning no guarantee.
pub fn rff_failure_probability(eps: f64, dim: usize, sigma_p: f64, diam: f64, d_hat: usize) -> f64 {
    let d = dim as f64;
    let a = 256.0 * (sigma_p * diam).powi(2) / (eps * eps);
    a * (-(d_hat as f64) * eps * eps / (4.0 * (d + 2.0))).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn rbf1() -> KernelSpec {
        KernelSpec::Rbf { sigma: 1.0 }
    }

    #[test]
    fn origin_features() {
        let m = RandomFeatureMap::sample(rbf1(), 2, 4, 1).unwrap();
        let f = m.features(&[0.0, 0.0]).unwrap();
        assert_eq!(f, vec![0.5, 0.0, 0.5, 0.0, 0.5, 0.0, 0.5, 0.0]);
    }

    #[test]
    fn hand_map() {
        let m = RandomFeatureMap::from_parts(rbf1(), vec![vec![PI, 0.0]], 0).unwrap();
        let f = m.features(&[0.5, 0.0]).unwrap();
        assert!(f[0].abs() < 1e-15);
        assert!((f[1] - 1.0).abs() < 1e-15);
        assert!(m.features(&[0.5]).is_err());
    }

    #[test]
    fn rebuild_is_bit_exact() {
        let a = RandomFeatureMap::sample(KernelSpec::Cauchy, 3, 17, 99).unwrap();
        let b = RandomFeatureMap::sample(KernelSpec::Cauchy, 3, 17, 99).unwrap();
        assert_eq!(a.omegas(), b.omegas());
        assert_eq!(a.feature_dim(), 34);
    }

    #[test]
    fn approximates_rbf() {
        let m = RandomFeatureMap::sample(rbf1(), 1, 4000, 2024).unwrap();
        let khat = m.approx_kernel(&[1.0], &[0.0]).unwrap();
        // Oracle: direct average of cos(ρΔ) over the drawn frequencies.
        let oracle = m.omegas().iter().map(|w| w[0].cos()).sum::<f64>() / 4000.0;
        assert!((khat - oracle).abs() < 1e-12);
        assert!((khat - (-0.5f64).exp()).abs() <= 0.05, "{khat}");
    }

    #[test]
    fn linear_kernel_rejected() {
        assert!(RandomFeatureMap::sample(KernelSpec::Linear, 2, 4, 0).is_err());
        assert!(RandomFeatureMap::sample(rbf1(), 2, 0, 0).is_err());
    }

    #[test]
    fn calibration_examples() {
        assert_eq!(calibrate_rff_dim(0.5, 0.5, 1, Some(1.0), 1.0).unwrap(), 366);
        assert_eq!(calibrate_rff_dim(0.5, 0.5, 1, Some(1.0), 2.0).unwrap(), 433);
        assert!(
            calibrate_rff_dim(0.25, 0.5, 1, Some(1.0), 1.0).unwrap()
                > calibrate_rff_dim(0.5, 0.5, 1, Some(1.0), 1.0).unwrap()
        );
        assert!(matches!(
            calibrate_rff_dim(0.5, 0.5, 1, None, 1.0),
            Err(Error::CalibrationUnsupported(_))
        ));
        assert!(calibrate_rff_dim(0.5, 1.5, 1, Some(1.0), 1.0).is_err());
    }

    #[test]
    fn failure_probability_inverts_calibration() {
        let d_hat = calibrate_rff_dim(0.25, 0.25, 1, Some(1.0), 2.0).unwrap();
        let p = rff_failure_probability(0.25, 1, 1.0, 2.0, d_hat);
        assert!(p <= 0.25);
        assert!(rff_failure_probability(0.25, 1, 1.0, 2.0, d_hat - 1) > 0.25);
    }

    proptest! {
        #[test]
        fn unit_norm_and_symmetry(
            seed in any::<u64>(),
            d_hat in 1usize..40,
            x in prop::collection::vec(-4.0f64..4.0, 2),
            y in prop::collection::vec(-4.0f64..4.0, 2),
        ) {
            let m = RandomFeatureMap::sample(KernelSpec::Rbf { sigma: 0.8 }, 2, d_hat, seed).unwrap();
            let fx = m.features(&x).unwrap();
            let fy = m.features(&y).unwrap();
            let norm: f64 = fx.iter().map(|v| v * v).sum::<f64>().sqrt();
            prop_assert!((norm - 1.0).abs() < 1e-12);
            let inner: f64 = fx.iter().zip(&fy).map(|(a, b)| a * b).sum();
            let k = m.approx_kernel(&x, &y).unwrap();
            prop_assert!((inner - k).abs() < 1e-12);
            prop_assert_eq!(k, m.approx_kernel(&y, &x).unwrap());
            prop_assert!(k.abs() <= 1.0);
            prop_assert_eq!(m.approx_kernel(&x, &x).unwrap(), 1.0);
        }
    }
}
