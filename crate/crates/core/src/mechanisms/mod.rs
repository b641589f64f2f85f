//! Output-perturbation mechanisms for SVM training.
//!
//! Each private mechanism first trains an exact hinge-loss SVM in some explicit
//! feature space, forms the primal weight vector `w̃ = Σ αᵢ yᵢ φ(xᵢ)` and then
//! releases `ŵ = w̃ + μ` with `μ` i.i.d. Laplace(0, λ). Only `ŵ`, the feature
//! map description and the public parameters leave the mechanism.
//!
//! Training is split into [`fit_finite`] / [`fit_rff`], which produce the
//! noiseless [`NonPrivateFit`], and [`NonPrivateFit::release`], which adds
//! fresh noise. The `train_private_*` functions do both in one call.

pub mod calibration;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::Database;
use crate::error::{require_dim, require_positive, Error, Result};
use crate::kernels::KernelSpec;
use crate::noise::sample_laplace;
use crate::rff::RandomFeatureMap;
use crate::solver::{
    identity_features, solve_dual, solve_svm_dual, GramMatrix, PrimalWeights, SolverOptions,
    SvmModel,
};

pub use calibration::*;

/// Explicit feature map a released weight vector lives in.
#[derive(Clone, Debug, PartialEq)]
pub enum FeatureMap {
    /// `φ(x) = x`; the induced kernel is the linear one and `F = d`.
    Identity { dim: usize },
    Random(RandomFeatureMap),
}

impl FeatureMap {
    pub fn input_dim(&self) -> usize {
        match self {
            FeatureMap::Identity { dim } => *dim,
            FeatureMap::Random(m) => m.input_dim(),
        }
    }

    pub fn feature_dim(&self) -> usize {
        match self {
            FeatureMap::Identity { dim } => *dim,
            FeatureMap::Random(m) => m.feature_dim(),
        }
    }

    pub fn features(&self, x: &[f64]) -> Result<Vec<f64>> {
        match self {
            FeatureMap::Identity { dim } => {
                require_dim(*dim, x.len())?;
                identity_features(x)
            }
            FeatureMap::Random(m) => m.features(x),
        }
    }
}

/// Guarantees a released model claims, with the inputs they were calibrated from.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Claims {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub delta: Option<f64>,
    /// Lipschitz constant of the loss (1 for hinge).
    pub lipschitz: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub kappa: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub phi: Option<f64>,
    /// `F` for finite maps, `d̂` for random features.
    pub feature_count: usize,
    pub n: usize,
}

/// A released private classifier `f̂(x) = ⟨ŵ, φ(x)⟩`.
#[derive(Clone, Debug, PartialEq)]
pub struct PrivateModel {
    pub w_hat: Vec<f64>,
    pub feature_map: FeatureMap,
    pub kernel: KernelSpec,
    pub c: f64,
    pub lambda: f64,
    pub claimed: Claims,
}

impl PrivateModel {
    pub fn decision(&self, x: &[f64]) -> Result<f64> {
        let phi = self.feature_map.features(x)?;
        Ok(self.w_hat.iter().zip(&phi).map(|(w, p)| w * p).sum())
    }

    pub fn with_claims(mut self, claims: Claims) -> Self {
        self.claimed = claims;
        self
    }
}

/// Exact primal solution `w̃` in an explicit feature space, before noise.
/// Never released; held only inside the mechanism and by audits.
#[derive(Clone, Debug, PartialEq)]
pub struct NonPrivateFit {
    pub weights: PrimalWeights,
    pub feature_map: FeatureMap,
    pub kernel: KernelSpec,
    pub c: f64,
    pub n: usize,
}

impl NonPrivateFit {
    pub fn decision(&self, x: &[f64]) -> Result<f64> {
        self.weights.decision(|v| self.feature_map.features(v), x)
    }

    /// Adds fresh Laplace(0, `lambda`) noise to every weight coordinate.
    pub fn release<R: Rng + ?Sized>(&self, lambda: f64, rng: &mut R) -> Result<PrivateModel> {
        require_positive("lambda", lambda)?;
        let mu = sample_laplace(lambda, self.weights.len(), rng)?;
        Ok(self.assemble(lambda, &mu))
    }

    /// Releases with a caller-chosen noise vector. Only for tests that need
    /// the noiseless weights or a reproduced draw.
    #[cfg(feature = "test-hooks")]
    pub fn release_with_noise(&self, lambda: f64, mu: &[f64]) -> Result<PrivateModel> {
        require_positive("lambda", lambda)?;
        require_dim(self.weights.len(), mu.len())?;
        Ok(self.assemble(lambda, mu))
    }

    pub(crate) fn assemble(&self, lambda: f64, mu: &[f64]) -> PrivateModel {
        let w_hat = self.weights.0.iter().zip(mu).map(|(w, m)| w + m).collect();
        let feature_count = match &self.feature_map {
            FeatureMap::Identity { dim } => *dim,
            FeatureMap::Random(m) => m.d_hat(),
        };
        PrivateModel {
            w_hat,
            feature_map: self.feature_map.clone(),
            kernel: self.kernel,
            c: self.c,
            lambda,
            claimed: Claims {
                lipschitz: 1.0,
                feature_count,
                n: self.n,
                ..Claims::default()
            },
        }
    }
}

/// Exact hinge-loss SVM with default solver settings.
pub fn train_svm(db: &Database, kernel: KernelSpec, c: f64) -> Result<SvmModel> {
    solve_svm_dual(db, kernel, c, SolverOptions::default())
}

/// Exact linear SVM and its primal weights under the identity map.
pub fn fit_finite(db: &Database, c: f64, opts: SolverOptions) -> Result<NonPrivateFit> {
    let model = solve_svm_dual(db, KernelSpec::Linear, c, opts)?;
    let weights = model.primal_weights(identity_features)?;
    Ok(NonPrivateFit {
        weights,
        feature_map: FeatureMap::Identity { dim: db.dim() },
        kernel: KernelSpec::Linear,
        c,
        n: db.len(),
    })
}

/// Exact SVM under the random-feature kernel `k̂` of `map`, with primal
/// weights of length `2 d̂`.
pub fn fit_rff_with_map(
    db: &Database,
    map: RandomFeatureMap,
    c: f64,
    opts: SolverOptions,
) -> Result<NonPrivateFit> {
    require_dim(map.input_dim(), db.dim())?;
    let feats: Vec<Vec<f64>> = db.points().map(|x| map.features_unchecked(x)).collect();
    let gram = GramMatrix::from_features(&feats);
    let sol = solve_dual(&gram, &db.signs(), c, opts)?;
    let mut w = vec![0.0; map.feature_dim()];
    for ((a, e), phi) in sol.alphas.iter().zip(db.entries()).zip(&feats) {
        let coef = a * e.y.sign();
        for (wk, pk) in w.iter_mut().zip(phi) {
            *wk += coef * pk;
        }
    }
    Ok(NonPrivateFit {
        weights: PrimalWeights(w),
        kernel: map.source_kernel(),
        feature_map: FeatureMap::Random(map),
        c,
        n: db.len(),
    })
}

/// Draws a fresh feature map with `d_hat` spectral vectors (seeded by `map_seed`)
/// and fits the exact SVM in that feature space.
pub fn fit_rff(
    db: &Database,
    kernel: KernelSpec,
    c: f64,
    d_hat: usize,
    map_seed: u64,
    opts: SolverOptions,
) -> Result<NonPrivateFit> {
    if !kernel.translation_invariant() {
        return Err(Error::UnsupportedKernel {
            family: kernel.name(),
            operation: "random-feature training",
        });
    }
    let map = RandomFeatureMap::sample(kernel, db.dim(), d_hat, map_seed)?;
    fit_rff_with_map(db, map, c, opts)
}

/// Private SVM with the identity feature map: `ŵ = Σ αᵢ yᵢ xᵢ + μ`.
/// `rng` supplies the noise only.
pub fn train_private_finite<R: Rng + ?Sized>(
    db: &Database,
    c: f64,
    lambda: f64,
    rng: &mut R,
) -> Result<PrivateModel> {
    require_positive("lambda", lambda)?;
    fit_finite(db, c, SolverOptions::default())?.release(lambda, rng)
}

/// Private SVM for a translation-invariant kernel via `d_hat` random Fourier
/// features. The first `u64` drawn from `rng` seeds the feature map; the
/// remaining stream supplies the noise.
pub fn train_private_rff<R: Rng + ?Sized>(
    db: &Database,
    kernel: KernelSpec,
    c: f64,
    lambda: f64,
    d_hat: usize,
    rng: &mut R,
) -> Result<PrivateModel> {
    require_positive("lambda", lambda)?;
    let map_seed = rng.next_u64();
    fit_rff(db, kernel, c, d_hat, map_seed, SolverOptions::default())?.release(lambda, rng)
}
