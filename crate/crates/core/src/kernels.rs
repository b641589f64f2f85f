//! Kernel families and sampling from the spectral measure of the
//! translation-invariant ones.
//!
//! Translation-invariant kernels are normalised so that `k(x, x) = 1`; their
//! spectral measure is then a probability distribution:
//!
//! | family      | `k(x, y)`                         | spectral draw per coordinate |
//! |-------------|-----------------------------------|------------------------------|
//! | `Rbf(σ)`    | `exp(-‖x-y‖₂² / (2σ²))`           | Normal(0, 1/σ²)              |
//! | `Laplacian` | `exp(-‖x-y‖₁)`                    | standard Cauchy              |
//! | `Cauchy`    | `∏ 1 / (1 + (xᵢ-yᵢ)²)`            | Laplace(0, 1)                |
//!
//! The unnormalised Cauchy kernel `∏ 2 / (1 + Δᵢ²)` is not offered; it would
//! give `k(x, x) = 2^d` and break the unit-diagonal property random features rely on.

use std::f64::consts::PI;
use std::fmt;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{require_dim, Error, Result};
use crate::noise::laplace_inverse_cdf;
use crate::rng::uniform_centered;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum KernelSpec {
    Linear,
    Rbf { sigma: f64 },
    Laplacian,
    Cauchy,
}

/// Second moment `E⟨ω, ω⟩` of a spectral distribution, which may diverge.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SecondMoment {
    Finite(f64),
    Infinite,
}

impl SecondMoment {
    /// `σ_p`, the square root of the moment, when finite.
    pub fn root(self) -> Option<f64> {
        match self {
            SecondMoment::Finite(m) => Some(m.sqrt()),
            SecondMoment::Infinite => None,
        }
    }
}

impl KernelSpec {
    pub fn rbf(sigma: f64) -> Result<Self> {
        let k = KernelSpec::Rbf { sigma };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            KernelSpec::Rbf { sigma } if !(sigma.is_finite() && sigma > 0.0) => Err(
                Error::param("sigma", format!("RBF bandwidth must be finite and > 0, got {sigma}")),
            ),
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            KernelSpec::Linear => "linear",
            KernelSpec::Rbf { .. } => "rbf",
            KernelSpec::Laplacian => "laplacian",
            KernelSpec::Cauchy => "cauchy",
        }
    }

    pub fn translation_invariant(&self) -> bool {
        !matches!(self, KernelSpec::Linear)
    }

    fn require_translation_invariant(&self, operation: &'static str) -> Result<()> {
        if self.translation_invariant() {
            Ok(())
        } else {
            Err(Error::UnsupportedKernel {
                family: self.name(),
                operation,
            })
        }
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        require_dim(x.len(), y.len())?;
        Ok(self.eval_unchecked(x, y))
    }

    pub(crate) fn eval_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        let pairs = x.iter().zip(y);
        match *self {
            KernelSpec::Linear => pairs.map(|(a, b)| a * b).sum(),
            KernelSpec::Rbf { sigma } => {
                let sq: f64 = pairs.map(|(a, b)| (a - b) * (a - b)).sum();
                (-sq / (2.0 * sigma * sigma)).exp()
            }
            KernelSpec::Laplacian => {
                let l1: f64 = pairs.map(|(a, b)| (a - b).abs()).sum();
                (-l1).exp()
            }
            KernelSpec::Cauchy => pairs.map(|(a, b)| 1.0 / (1.0 + (a - b) * (a - b))).product(),
        }
    }

    /// `g(Δ)` with `k(x, y) = g(x - y)`.
    pub fn profile(&self, delta: &[f64]) -> Result<f64> {
        self.require_translation_invariant("profile evaluation")?;
        let zero = vec![0.0; delta.len()];
        self.eval(delta, &zero)
    }

    /// `count` i.i.d. draws in `R^dim` from the kernel's spectral distribution.
    pub fn sample_spectral<R: Rng + ?Sized>(
        &self,
        dim: usize,
        count: usize,
        rng: &mut R,
    ) -> Result<Vec<Vec<f64>>> {
        self.require_translation_invariant("spectral sampling")?;
        self.validate()?;
        if dim == 0 {
            return Err(Error::param("dim", "must be at least 1"));
        }
        let draw = |rng: &mut R| -> f64 {
            match *self {
                KernelSpec::Rbf { sigma } => {
                    let z: f64 = rng.sample(StandardNormal);
                    z / sigma
                }
                KernelSpec::Laplacian => (PI * uniform_centered(rng)).tan(),
                KernelSpec::Cauchy => laplace_inverse_cdf(uniform_centered(rng), 1.0),
                KernelSpec::Linear => unreachable!("rejected above"),
            }
        };
        Ok((0..count)
            .map(|_| (0..dim).map(|_| draw(rng)).collect())
            .collect())
    }

    /// `σ_p² = E⟨ω, ω⟩` under the spectral distribution in `R^dim`.
    pub fn spectral_second_moment(&self, dim: usize) -> Result<SecondMoment> {
        self.require_translation_invariant("spectral moments")?;
        let d = dim as f64;
        Ok(match *self {
            KernelSpec::Rbf { sigma } => SecondMoment::Finite(d / (sigma * sigma)),
            KernelSpec::Cauchy => SecondMoment::Finite(2.0 * d),
            KernelSpec::Laplacian => SecondMoment::Infinite,
            KernelSpec::Linear => unreachable!("rejected above"),
        })
    }
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelSpec::Rbf { sigma } => write!(f, "rbf(sigma={sigma})"),
            other => f.write_str(other.name()),
        }
    }
}

/// Anything usable as a kernel by the dual solver.
pub trait Kernel {
    fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64>;
}

impl Kernel for KernelSpec {
    fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        KernelSpec::eval(self, x, y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    const ALL_TI: [KernelSpec; 4] = [
        KernelSpec::Rbf { sigma: 1.0 },
        KernelSpec::Rbf { sigma: 0.4 },
        KernelSpec::Laplacian,
        KernelSpec::Cauchy,
    ];

    #[test]
    fn table_values() {
        let rbf = KernelSpec::Rbf { sigma: 1.0 };
        assert_eq!(rbf.eval(&[0.3, -1.0], &[0.3, -1.0]).unwrap(), 1.0);
        assert_abs_diff_eq!(rbf.eval(&[1.0, 0.0], &[0.0, 0.0]).unwrap(), 0.606531, epsilon = 1e-6);
        assert_abs_diff_eq!(
            KernelSpec::Laplacian.eval(&[1.0, 1.0], &[0.0, 0.0]).unwrap(),
            0.135335,
            epsilon = 1e-6
        );
        assert_eq!(KernelSpec::Linear.eval(&[2.0, 0.0], &[3.0, 0.0]).unwrap(), 6.0);
        assert_abs_diff_eq!(
            KernelSpec::Cauchy.eval(&[1.0, 2.0], &[0.0, 0.0]).unwrap(),
            0.5 * 0.2,
            epsilon = 1e-15
        );
        assert!(matches!(
            rbf.eval(&[1.0], &[1.0, 2.0]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(KernelSpec::rbf(0.0).is_err());
    }

    #[test]
    fn rbf_spectral_variance() {
        let k = KernelSpec::Rbf { sigma: 2.0 };
        let draws = k.sample_spectral(3, 100_000, &mut seeded(1)).unwrap();
        for c in 0..3 {
            let n = draws.len() as f64;
            let mean = draws.iter().map(|w| w[c]).sum::<f64>() / n;
            let var = draws.iter().map(|w| (w[c] - mean).powi(2)).sum::<f64>() / (n - 1.0);
            assert!((var - 0.25).abs() <= 0.01, "coordinate {c}: {var}");
        }
    }

    #[test]
    fn cauchy_kernel_spectral_abs_mean() {
        let draws = KernelSpec::Cauchy.sample_spectral(1, 100_000, &mut seeded(2)).unwrap();
        let m = draws.iter().map(|w| w[0].abs()).sum::<f64>() / draws.len() as f64;
        assert!((m - 1.0).abs() <= 0.02, "{m}");
    }

    #[test]
    fn sampling_is_deterministic() {
        for k in ALL_TI {
            let a = k.sample_spectral(2, 50, &mut seeded(9)).unwrap();
            let b = k.sample_spectral(2, 50, &mut seeded(9)).unwrap();
            assert_eq!(a, b);
        }
        assert!(matches!(
            KernelSpec::Linear.sample_spectral(2, 5, &mut seeded(9)),
            Err(Error::UnsupportedKernel { .. })
        ));
    }

    #[test]
    fn second_moments() {
        assert_eq!(
            KernelSpec::Rbf { sigma: 1.0 }.spectral_second_moment(2).unwrap(),
            SecondMoment::Finite(2.0)
        );
        assert_eq!(
            KernelSpec::Cauchy.spectral_second_moment(3).unwrap(),
            SecondMoment::Finite(6.0)
        );
        assert_eq!(
            KernelSpec::Laplacian.spectral_second_moment(4).unwrap(),
            SecondMoment::Infinite
        );
        assert!(KernelSpec::Linear.spectral_second_moment(1).is_err());
    }

    #[test]
    fn second_moment_matches_samples() {
        // Monte Carlo check of the closed forms for the families with finite moment.
        for (k, dim) in [(KernelSpec::Rbf { sigma: 0.7 }, 2usize), (KernelSpec::Cauchy, 3)] {
            let draws = k.sample_spectral(dim, 200_000, &mut seeded(17)).unwrap();
            let m = draws
                .iter()
                .map(|w| w.iter().map(|v| v * v).sum::<f64>())
                .sum::<f64>()
                / draws.len() as f64;
            let expected = match k.spectral_second_moment(dim).unwrap() {
                SecondMoment::Finite(v) => v,
                SecondMoment::Infinite => unreachable!(),
            };
            assert!((m - expected).abs() / expected < 0.02, "{k}: {m} vs {expected}");
        }
    }

    /// Bochner consistency: the empirical characteristic function of the
    /// spectral sample reproduces the kernel profile.
    #[test]
    fn empirical_characteristic_function() {
        let displacements: [[f64; 2]; 5] =
            [[0.0, 0.0], [0.5, 0.0], [0.3, -0.4], [1.0, 1.0], [-1.5, 0.2]];
        for k in ALL_TI {
            let draws = k.sample_spectral(2, 100_000, &mut seeded(23)).unwrap();
            for delta in &displacements {
                let ecf = draws
                    .iter()
                    .map(|w| (w[0] * delta[0] + w[1] * delta[1]).cos())
                    .sum::<f64>()
                    / draws.len() as f64;
                let g = k.profile(delta).unwrap();
                assert!((ecf - g).abs() <= 0.02, "{k} at {delta:?}: {ecf} vs {g}");
            }
        }
    }

    #[test]
    fn serde_tagged_record() {
        let json = serde_json::to_string(&KernelSpec::Rbf { sigma: 1.0 }).unwrap();
        assert_eq!(json, r#"{"family":"rbf","sigma":1.0}"#);
        let back: KernelSpec = serde_json::from_str(r#"{"family":"cauchy"}"#).unwrap();
        assert_eq!(back, KernelSpec::Cauchy);
    }

    fn kernel() -> impl Strategy<Value = KernelSpec> {
        prop_oneof![
            Just(KernelSpec::Linear),
            (0.5f64..5.0).prop_map(|sigma| KernelSpec::Rbf { sigma }),
            Just(KernelSpec::Laplacian),
            Just(KernelSpec::Cauchy),
        ]
    }

    proptest! {
        #[test]
        fn symmetric(k in kernel(), x in prop::collection::vec(-5.0f64..5.0, 3), y in prop::collection::vec(-5.0f64..5.0, 3)) {
            prop_assert_eq!(k.eval(&x, &y).unwrap(), k.eval(&y, &x).unwrap());
        }

        #[test]
        fn translation_invariant_families(
            k in kernel().prop_filter("ti", |k| k.translation_invariant()),
            x in prop::collection::vec(-3.0f64..3.0, 2),
            y in prop::collection::vec(-3.0f64..3.0, 2),
            t in prop::collection::vec(-3.0f64..3.0, 2),
        ) {
            let v = k.eval(&x, &y).unwrap();
            let xs: Vec<f64> = x.iter().zip(&t).map(|(a, b)| a + b).collect();
            let ys: Vec<f64> = y.iter().zip(&t).map(|(a, b)| a + b).collect();
            prop_assert!((k.eval(&xs, &ys).unwrap() - v).abs() < 1e-12);
            prop_assert!(v > 0.0 && v <= 1.0);
            prop_assert_eq!(k.eval(&x, &x).unwrap(), 1.0);
        }
    }
}
