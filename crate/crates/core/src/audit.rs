//! Empirical checks of the mechanisms' guarantees.
//!
//! Each audit is a pure function of its configuration and a 64-bit base seed.
//! Trial `t` draws from its own generator seeded with [`mix64`]`(seed, t)`, so
//! trials run in parallel and reports only use order-independent reductions
//! (max, min, counts).
//!
//! The privacy-ratio audit is a smoke test: a finite histogram can reveal a
//! grossly miscalibrated mechanism but can never certify differential privacy.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};

use rand::{Rng, RngCore};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::data::{Database, DomainBox, Example, Label};
use crate::error::{require_positive, require_unit_open, Error, Result};
use crate::kernels::KernelSpec;
use crate::mechanisms::{
    fit_finite, fit_rff, fit_rff_with_map, rbf_packing_size, sensitivity_bound, train_svm,
    NonPrivateFit, PrivateModel,
};
use crate::noise::sample_laplace;
use crate::numfmt::to_json_string;
use crate::rff::{rff_failure_probability, RandomFeatureMap};
use crate::rng::{mix64, seeded, SeededRng};
use crate::solver::{solve_svm_dual, SolverOptions, SvmModel};

/// Which side of the bound the statistic must fall on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    AtMost,
    AtLeast,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub name: String,
    pub trials: usize,
    pub statistic: f64,
    pub bound: f64,
    pub direction: Direction,
    pub pass: bool,
    pub seed: u64,
    pub details: BTreeMap<String, Value>,
}

impl AuditReport {
    fn new(name: &str, trials: usize, statistic: f64, bound: f64, direction: Direction, seed: u64) -> Self {
        let pass = match direction {
            Direction::AtMost => statistic <= bound,
            Direction::AtLeast => statistic >= bound,
        };
        Self {
            name: name.into(),
            trials,
            statistic,
            bound,
            direction,
            pass,
            seed,
            details: BTreeMap::new(),
        }
    }

    fn detail(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.details.insert(key.into(), value.into());
        self
    }

    /// `{"audit": {...}}` with 17-digit reals.
    pub fn to_json(&self) -> Result<String> {
        to_json_string(&json!({ "audit": self }))
    }
}

fn trial_rng(seed: u64, t: usize) -> SeededRng {
    seeded(mix64(seed, t as u64))
}

fn require_trials(trials: usize) -> Result<()> {
    if trials == 0 {
        Err(Error::param("trials", "must be at least 1"))
    } else {
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Lower-bound database families

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Construction {
    /// Two 1-D databases whose linear SVMs differ by exactly `2ε` in weight.
    LinearPair {
        c: f64,
        n: usize,
        eps: f64,
        /// Outer point magnitude `M = 2nε/C`.
        big_m: f64,
        /// Offset of the last point from `M`: `m = nε/C`.
        small_m: f64,
        /// Closed-form weights of the two optimal linear SVMs.
        w_first: f64,
        w_second: f64,
    },
    /// `N` 2-D databases whose RBF SVMs are pairwise far apart.
    RbfPacking {
        c: f64,
        n: usize,
        sigma: f64,
        packing_size: usize,
        angles: Vec<f64>,
    },
}

/// Pairwise-neighbouring databases whose optimal classifiers are separated,
/// so no accurate mechanism can be too private on all of them.
#[derive(Clone, Debug, PartialEq)]
pub struct LowerBoundFamily {
    pub databases: Vec<Database>,
    pub expected_separation: f64,
    pub construction: Construction,
}

/// Largest ε for which [`linear_separation_pair`] is valid (exclusive): `√C/(2n)`.
pub fn linear_pair_eps_limit(c: f64, n: usize) -> f64 {
    c.sqrt() / (2.0 * n as f64)
}

/// `⌊n/2⌋` negatives at `-M`, `n-1-⌊n/2⌋` positives at `+M`, and a last point at
/// `M - m` labelled -1 in the first database and +1 in the second, with
/// `M = 2nε/C`, `m = nε/C`. The optimal weights are `C(M(n-2)+m)/n` and
/// `C(Mn-m)/n`, exactly `2ε` apart.
pub fn linear_separation_pair(c: f64, n: usize, eps: f64) -> Result<LowerBoundFamily> {
    require_positive("C", c)?;
    if n < 2 {
        return Err(Error::param("n", format!("must exceed 1, got {n}")));
    }
    let limit = linear_pair_eps_limit(c, n);
    if !(eps > 0.0 && eps < limit) {
        return Err(Error::Precondition(format!(
            "eps must satisfy 0 < eps < sqrt(C)/(2n) = {limit}, got {eps}"
        )));
    }
    let nf = n as f64;
    let big_m = 2.0 * nf * eps / c;
    let small_m = nf * eps / c;
    let negatives = n / 2;
    let mut shared = Vec::with_capacity(n);
    for _ in 0..negatives {
        shared.push(Example::new(vec![-big_m], Label::Negative)?);
    }
    for _ in 0..(n - 1 - negatives) {
        shared.push(Example::new(vec![big_m], Label::Positive)?);
    }
    let with_last = |y| -> Result<Database> {
        let mut entries = shared.clone();
        entries.push(Example::new(vec![big_m - small_m], y)?);
        Database::new(entries)
    };
    Ok(LowerBoundFamily {
        databases: vec![with_last(Label::Negative)?, with_last(Label::Positive)?],
        expected_separation: 2.0 * eps,
        construction: Construction::LinearPair {
            c,
            n,
            eps,
            big_m,
            small_m,
            w_first: c * (big_m * (nf - 2.0) + small_m) / nf,
            w_second: c * (big_m * nf - small_m) / nf,
        },
    })
}

/// `N` databases sharing `n-1` negatives at the origin; database `i` ends with
/// a positive at angle `2πi/N` on the unit circle. Requires `n > C` (so the
/// last dual variable sits at its bound) and `σ` below the packing ceiling.
pub fn rbf_packing_family(c: f64, n: usize, sigma: f64) -> Result<LowerBoundFamily> {
    require_positive("C", c)?;
    if n < 2 {
        return Err(Error::param("n", format!("must exceed 1, got {n}")));
    }
    if n as f64 <= c {
        return Err(Error::Precondition(format!("n > C required, got n={n}, C={c}")));
    }
    let big_n = rbf_packing_size(sigma).map_err(|e| Error::Precondition(e.to_string()))?;
    if big_n < 2 {
        return Err(Error::Precondition(format!("packing size {big_n} is below 2")));
    }
    let origin = Example::new(vec![0.0, 0.0], Label::Negative)?;
    let angles: Vec<f64> = (0..big_n).map(|i| TAU * i as f64 / big_n as f64).collect();
    let databases = angles
        .iter()
        .map(|t| {
            let mut entries = vec![origin.clone(); n - 1];
            entries.push(Example::new(vec![t.cos(), t.sin()], Label::Positive)?);
            Database::new(entries)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LowerBoundFamily {
        databases,
        expected_separation: c / (2.0 * n as f64),
        construction: Construction::RbfPacking {
            c,
            n,
            sigma,
            packing_size: big_n,
            angles,
        },
    })
}

// ---------------------------------------------------------------------------
// Sensitivity

/// Linear-SVM weights of `db` under the identity map.
pub fn linear_weights(db: &Database, c: f64) -> Result<Vec<f64>> {
    Ok(fit_finite(db, c, SolverOptions::default())?.weights.0)
}

/// `‖w_D1 - w_D2‖₁` for the linear SVMs of two neighbouring databases.
pub fn pair_weight_distance(d1: &Database, d2: &Database, c: f64) -> Result<f64> {
    if !d1.is_neighbor_of(d2) {
        return Err(Error::NotNeighbors("databases differ in more than one entry".into()));
    }
    let a = fit_finite(d1, c, SolverOptions::default())?.weights;
    let b = fit_finite(d2, c, SolverOptions::default())?.weights;
    Ok(a.l1_distance(&b))
}

/// How [`sensitivity_audit`] draws databases.
#[derive(Clone, Debug, PartialEq)]
pub struct DatabaseGenerator {
    pub n: usize,
    /// Points are uniform in this box; labels are fair coin flips.
    pub domain: DomainBox,
}

impl DatabaseGenerator {
    fn point<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.domain
            .lower()
            .iter()
            .zip(self.domain.upper())
            .map(|(l, u)| l + (u - l) * rng.random::<f64>())
            .collect()
    }

    fn example<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Example> {
        let y = if rng.random::<bool>() { Label::Positive } else { Label::Negative };
        Example::new(self.point(rng), y)
    }

    pub fn database<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Database> {
        Database::new((0..self.n).map(|_| self.example(rng)).collect::<Result<_>>()?)
    }
}

/// Largest observed `‖w_D - w_D'‖₁` over random neighbouring pairs, against
/// `4Cκ√d/n` with κ the largest norm in the box.
pub fn sensitivity_audit(gen: &DatabaseGenerator, trials: usize, c: f64, seed: u64) -> Result<AuditReport> {
    require_trials(trials)?;
    require_positive("C", c)?;
    let kappa = gen.domain.max_norm();
    let bound = sensitivity_bound(1.0, c, kappa, gen.domain.dim(), gen.n)?;
    let distances = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, t);
            let db = gen.database(&mut rng)?;
            let other = db.replace_last(gen.example(&mut rng)?)?;
            pair_weight_distance(&db, &other, c)
        })
        .collect::<Result<Vec<f64>>>()?;
    let max = distances.iter().copied().fold(0.0, f64::max);
    let violations = distances.iter().filter(|&&d| d > bound).count();
    Ok(AuditReport::new("sensitivity", trials, max, bound, Direction::AtMost, seed)
        .detail("kappa", kappa)
        .detail("n", gen.n)
        .detail("features", gen.domain.dim())
        .detail("violations", violations))
}

// ---------------------------------------------------------------------------
// Sup-norm distance

/// `max |f(x) - g(x)|` over a regular grid on `domain`.
pub fn sup_norm_distance<F, G>(f: F, g: G, domain: &DomainBox, resolution: usize) -> Result<f64>
where
    F: Fn(&[f64]) -> Result<f64>,
    G: Fn(&[f64]) -> Result<f64>,
{
    let mut sup = 0.0_f64;
    for x in domain.grid(resolution)? {
        sup = sup.max((f(&x)? - g(&x)?).abs());
    }
    Ok(sup)
}

/// Grid resolution used when the caller does not choose one: dense in low
/// dimension, coarse enough to stay tractable above that.
pub fn default_grid_resolution(dim: usize) -> usize {
    match dim {
        0..=2 => 51,
        3..=4 => 11,
        _ => 5,
    }
}

// ---------------------------------------------------------------------------
// Utility

/// Mechanism under a utility audit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum UtilityMechanism {
    /// Identity map; the reference is the exact linear SVM.
    Finite { c: f64, lambda: f64 },
    /// Random features; the reference is the exact SVM under `kernel` itself.
    Rff { kernel: KernelSpec, c: f64, lambda: f64, d_hat: usize },
}

fn hinge(v: f64) -> f64 {
    (1.0 - v).max(0.0)
}

struct UtilityTrial {
    distance: f64,
    risk_gap: f64,
}

/// Fraction of trials in which the released classifier is more than `eps`
/// from the reference on the domain (grid plus training points). Passes when
/// that fraction is at most `delta` and every trial's mean hinge-loss gap on
/// the training set stays within its measured distance.
#[allow(clippy::too_many_arguments)]
pub fn utility_audit(
    db: &Database,
    mechanism: UtilityMechanism,
    domain: &DomainBox,
    eps: f64,
    delta: f64,
    trials: usize,
    resolution: Option<usize>,
    seed: u64,
) -> Result<AuditReport> {
    utility_audit_inner(db, mechanism, domain, eps, delta, trials, resolution, seed, false)
}

/// [`utility_audit`] with every noise draw forced to zero.
#[cfg(feature = "test-hooks")]
#[allow(clippy::too_many_arguments)]
pub fn utility_audit_without_noise(
    db: &Database,
    mechanism: UtilityMechanism,
    domain: &DomainBox,
    eps: f64,
    delta: f64,
    trials: usize,
    resolution: Option<usize>,
    seed: u64,
) -> Result<AuditReport> {
    utility_audit_inner(db, mechanism, domain, eps, delta, trials, resolution, seed, true)
}

#[allow(clippy::too_many_arguments)]
fn utility_audit_inner(
    db: &Database,
    mechanism: UtilityMechanism,
    domain: &DomainBox,
    eps: f64,
    delta: f64,
    trials: usize,
    resolution: Option<usize>,
    seed: u64,
    zero_noise: bool,
) -> Result<AuditReport> {
    require_trials(trials)?;
    require_positive("eps", eps)?;
    require_unit_open("delta", delta)?;
    if domain.dim() != db.dim() {
        return Err(Error::DimensionMismatch {
            expected: db.dim(),
            found: domain.dim(),
        });
    }
    let resolution = resolution.unwrap_or_else(|| default_grid_resolution(db.dim()));
    let mut points = domain.grid(resolution)?;
    points.extend(db.points().map(<[f64]>::to_vec));

    let release = |fit: &NonPrivateFit, lambda: f64, rng: &mut SeededRng| -> Result<PrivateModel> {
        if zero_noise {
            Ok(fit.assemble(lambda, &vec![0.0; fit.weights.len()]))
        } else {
            fit.release(lambda, rng)
        }
    };

    // Validate before training anything, then evaluate the reference once.
    let (name, finite_fit, reference_values) = match mechanism {
        UtilityMechanism::Finite { c, lambda } => {
            require_positive("lambda", lambda)?;
            let fit = fit_finite(db, c, SolverOptions::default())?;
            let values = points.iter().map(|x| fit.decision(x)).collect::<Result<Vec<_>>>()?;
            ("utility_finite", Some(fit), values)
        }
        UtilityMechanism::Rff { kernel, c, lambda, d_hat } => {
            require_positive("lambda", lambda)?;
            if d_hat == 0 {
                return Err(Error::param("d_hat", "must be at least 1"));
            }
            if !kernel.translation_invariant() {
                return Err(Error::UnsupportedKernel {
                    family: kernel.name(),
                    operation: "random-feature training",
                });
            }
            let exact = solve_svm_dual(db, kernel, c, SolverOptions::default())?;
            let values = points.iter().map(|x| exact.decision(x)).collect::<Result<Vec<_>>>()?;
            ("utility_rff", None, values)
        }
    };
    let n_grid = points.len() - db.len();
    let signs = db.signs();

    let outcomes = (0..trials)
        .into_par_iter()
        .map(|t| -> Result<UtilityTrial> {
            let mut rng = trial_rng(seed, t);
            let model = match (mechanism, &finite_fit) {
                (UtilityMechanism::Finite { lambda, .. }, Some(fit)) => release(fit, lambda, &mut rng)?,
                (UtilityMechanism::Rff { kernel, c, lambda, d_hat }, _) => {
                    let map_seed = rng.next_u64();
                    let fit = fit_rff(db, kernel, c, d_hat, map_seed, SolverOptions::default())?;
                    release(&fit, lambda, &mut rng)?
                }
                _ => unreachable!("finite fit prepared above"),
            };
            let mut distance = 0.0_f64;
            let mut risk_gap = 0.0;
            for (i, (x, r)) in points.iter().zip(&reference_values).enumerate() {
                let v = model.decision(x)?;
                distance = distance.max((v - r).abs());
                if i >= n_grid {
                    let y = signs[i - n_grid];
                    risk_gap += hinge(y * v) - hinge(y * r);
                }
            }
            Ok(UtilityTrial {
                distance,
                risk_gap: (risk_gap / db.len() as f64).abs(),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let failures = outcomes.iter().filter(|o| o.distance > eps).count();
    let transfer_violations = outcomes
        .iter()
        .filter(|o| o.risk_gap > o.distance + 1e-12)
        .count();
    let max_distance = outcomes.iter().map(|o| o.distance).fold(0.0, f64::max);
    let rate = failures as f64 / trials as f64;
    let mut report = AuditReport::new(name, trials, rate, delta, Direction::AtMost, seed)
        .detail("eps", eps)
        .detail("failures", failures)
        .detail("max_distance", max_distance)
        .detail("grid_resolution", resolution)
        .detail("risk_transfer_violations", transfer_violations)
        .detail("noise_disabled", zero_noise);
    report.pass &= transfer_violations == 0;
    Ok(report)
}

// ---------------------------------------------------------------------------
// Kernel approximation

/// Largest `|k̂(Δ) - k(Δ)|` over the lattice of grid displacements.
pub fn kernel_sup_error(map: &RandomFeatureMap, displacements: &[Vec<f64>]) -> f64 {
    let k = map.source_kernel();
    displacements
        .iter()
        .map(|d| (map.approx_profile(d) - k.profile(d).unwrap_or(f64::NAN)).abs())
        .fold(0.0, f64::max)
}

/// Fraction of independent feature-map draws whose uniform error on the
/// domain reaches `eps`, against the failure probability the uniform
/// approximation bound assigns to `d_hat`. When that probability is at least
/// 1 (or the kernel's spectral second moment diverges) the bound is vacuous
/// and reported as 1.
pub fn kernel_approx_audit(
    kernel: KernelSpec,
    d_hat: usize,
    domain: &DomainBox,
    eps: f64,
    trials: usize,
    resolution: Option<usize>,
    seed: u64,
) -> Result<AuditReport> {
    require_trials(trials)?;
    require_positive("eps", eps)?;
    if !kernel.translation_invariant() {
        return Err(Error::UnsupportedKernel {
            family: kernel.name(),
            operation: "random features",
        });
    }
    kernel.validate()?;
    let dim = domain.dim();
    let resolution = resolution.unwrap_or_else(|| default_grid_resolution(dim));
    let displacements = domain.grid_displacements(resolution)?;
    let delta_theory = kernel
        .spectral_second_moment(dim)?
        .root()
        .map(|sp| rff_failure_probability(eps, dim, sp, domain.diameter(), d_hat));
    let bound = delta_theory.map_or(1.0, |d| d.min(1.0));
    let errors = (0..trials)
        .into_par_iter()
        .map(|t| {
            let map = RandomFeatureMap::sample(kernel, dim, d_hat, mix64(seed, t as u64))?;
            Ok(kernel_sup_error(&map, &displacements))
        })
        .collect::<Result<Vec<f64>>>()?;
    let failures = errors.iter().filter(|&&e| e >= eps).count();
    let rate = failures as f64 / trials as f64;
    let mut report = AuditReport::new("kernel_approx", trials, rate, bound, Direction::AtMost, seed)
        .detail("d_hat", d_hat)
        .detail("eps", eps)
        .detail("failures", failures)
        .detail("max_sup_error", errors.iter().copied().fold(0.0, f64::max))
        .detail("vacuous", bound >= 1.0)
        .detail("grid_resolution", resolution);
    if let Some(d) = delta_theory {
        report = report.detail("theoretical_delta", d);
    }
    Ok(report)
}

// ---------------------------------------------------------------------------
// Privacy ratio

/// Mechanism under a privacy-ratio audit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PrivacyMechanism {
    Finite { c: f64, lambda: f64 },
    /// The feature map is drawn once from `map_seed` and shared by both
    /// databases, so only the Laplace noise differs between releases.
    Rff { kernel: KernelSpec, c: f64, lambda: f64, d_hat: usize, map_seed: u64 },
}

/// Minimum count a bin needs in both histograms to enter the statistic.
pub const MIN_BIN_COUNT: u64 = 20;

/// Histograms coordinate `coordinate` of the released weights on `d1` and
/// `d2` over shared bins; the statistic is the largest `|ln(p̂₁/p̂₂)|` among
/// bins with at least [`MIN_BIN_COUNT`] counts on both sides. Passes when it
/// is at most `β + 3√(2/c_min)`, with `c_min` the smallest count entering the
/// statistic (a heuristic allowance for sampling error, not a confidence bound).
#[allow(clippy::too_many_arguments)]
pub fn privacy_ratio_audit(
    d1: &Database,
    d2: &Database,
    mechanism: PrivacyMechanism,
    beta: f64,
    trials: usize,
    bins: usize,
    coordinate: usize,
    seed: u64,
) -> Result<AuditReport> {
    require_trials(trials)?;
    require_positive("beta", beta)?;
    if bins == 0 {
        return Err(Error::param("bins", "must be at least 1"));
    }
    if !d1.is_neighbor_of(d2) {
        return Err(Error::NotNeighbors(
            "privacy audit requires databases differing in at most one entry".into(),
        ));
    }
    let opts = SolverOptions::default();
    let (fit1, fit2, lambda) = match mechanism {
        PrivacyMechanism::Finite { c, lambda } => (fit_finite(d1, c, opts)?, fit_finite(d2, c, opts)?, lambda),
        PrivacyMechanism::Rff { kernel, c, lambda, d_hat, map_seed } => {
            let map = RandomFeatureMap::sample(kernel, d1.dim(), d_hat, map_seed)?;
            (
                fit_rff_with_map(d1, map.clone(), c, opts)?,
                fit_rff_with_map(d2, map, c, opts)?,
                lambda,
            )
        }
    };
    require_positive("lambda", lambda)?;
    let len = fit1.weights.len();
    if coordinate >= len {
        return Err(Error::param("coordinate", format!("must be below {len}")));
    }
    let draw = |fit: &NonPrivateFit, stream: u64| -> Result<Vec<f64>> {
        (0..trials)
            .into_par_iter()
            .map(|t| {
                let mut rng = seeded(mix64(seed, 2 * t as u64 + stream));
                let mu = sample_laplace(lambda, len, &mut rng)?;
                Ok(fit.weights.0[coordinate] + mu[coordinate])
            })
            .collect()
    };
    let s1 = draw(&fit1, 0)?;
    let s2 = draw(&fit2, 1)?;

    let lo = s1.iter().chain(&s2).copied().fold(f64::INFINITY, f64::min);
    let hi = s1.iter().chain(&s2).copied().fold(f64::NEG_INFINITY, f64::max);
    let width = (hi - lo) / bins as f64;
    let histogram = |s: &[f64]| {
        let mut h = vec![0u64; bins];
        for v in s {
            let b = if width > 0.0 { ((v - lo) / width) as usize } else { 0 };
            h[b.min(bins - 1)] += 1;
        }
        h
    };
    let (h1, h2) = (histogram(&s1), histogram(&s2));
    let mut statistic = 0.0_f64;
    let mut min_count = u64::MAX;
    let mut used = 0usize;
    for (a, b) in h1.iter().zip(&h2) {
        if *a >= MIN_BIN_COUNT && *b >= MIN_BIN_COUNT {
            statistic = statistic.max((*a as f64 / *b as f64).ln().abs());
            min_count = min_count.min((*a).min(*b));
            used += 1;
        }
    }
    let slack = if used == 0 { 0.0 } else { 3.0 * (2.0 / min_count as f64).sqrt() };
    Ok(AuditReport::new("privacy_ratio", trials, statistic, beta + slack, Direction::AtMost, seed)
        .detail("beta", beta)
        .detail("slack", slack)
        .detail("lambda", lambda)
        .detail("bins", bins)
        .detail("bins_used", used)
        .detail("coordinate", coordinate)
        .detail("min_bin_count", if used == 0 { 0 } else { min_count })
        .detail("center_first", fit1.weights.0[coordinate])
        .detail("center_second", fit2.weights.0[coordinate])
        .detail("smoke_test_only", true))
}

// ---------------------------------------------------------------------------
// RBF packing separation

/// Trains an exact RBF SVM on every database of [`rbf_packing_family`] and
/// reports the smallest `|fᵢ(xᵢ) - fⱼ(xᵢ)|` over ordered pairs `i ≠ j`, where
/// `xᵢ` is database `i`'s last point. Passes when it is at least `C/(2n)`
/// (less 1e-6 for solver tolerance).
pub fn rbf_packing_separation_audit(c: f64, n: usize, sigma: f64) -> Result<AuditReport> {
    let family = rbf_packing_family(c, n, sigma)?;
    let kernel = KernelSpec::rbf(sigma)?;
    let models = family
        .databases
        .par_iter()
        .map(|db| train_svm(db, kernel, c))
        .collect::<Result<Vec<SvmModel>>>()?;
    let big_n = models.len();
    let lasts: Vec<&[f64]> = family.databases.iter().map(|db| db.last().x.as_slice()).collect();
    let own: Vec<f64> = models
        .iter()
        .zip(&lasts)
        .map(|(m, x)| m.decision(x))
        .collect::<Result<_>>()?;
    let alpha_last: Vec<f64> = models.iter().map(|m| m.alphas[n - 1]).collect();

    let mut min_sep = f64::INFINITY;
    let mut level_violations = 0usize;
    for i in 0..big_n {
        for j in 0..big_n {
            if i == j {
                continue;
            }
            let sep = (own[i] - models[j].decision(lasts[i])?).abs();
            min_sep = min_sep.min(sep);
            // Per-pair floor: the last points' kernel value caps how much of
            // the last dual variable the other model can reproduce.
            let floor = (1.0 - kernel.eval(lasts[i], lasts[j])?) * alpha_last[i].min(alpha_last[j]);
            if sep < floor - 1e-6 {
                level_violations += 1;
            }
        }
    }
    let adjacent_floor = (1.0 - (-(2.0 / (sigma * sigma)) * (PI / big_n as f64).sin().powi(2)).exp()) * c / n as f64;
    let bound = family.expected_separation - 1e-6;
    let mut report = AuditReport::new("rbf_packing_separation", big_n, min_sep, bound, Direction::AtLeast, 0)
        .detail("packing_size", big_n)
        .detail("pairs", big_n * (big_n - 1) / 2)
        .detail("expected_separation", family.expected_separation)
        .detail("alpha_last_min", alpha_last.iter().copied().fold(f64::INFINITY, f64::min))
        .detail("alpha_last_max", alpha_last.iter().copied().fold(f64::NEG_INFINITY, f64::max))
        .detail("adjacent_floor", adjacent_floor)
        .detail("pair_floor_violations", level_violations);
    report.pass &= level_violations == 0;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_pair_values() {
        let fam = linear_separation_pair(1.0, 10, 0.04).unwrap();
        let Construction::LinearPair { big_m, small_m, w_first, w_second, .. } = fam.construction else {
            panic!("wrong construction");
        };
        assert!((big_m - 0.8).abs() < 1e-15);
        assert!((small_m - 0.4).abs() < 1e-15);
        assert!((w_first - 0.68).abs() < 1e-12);
        assert!((w_second - 0.76).abs() < 1e-12);
        assert!(1.0 / big_m > w_second);
        assert!((fam.expected_separation - 0.08).abs() < 1e-15);
        assert!(fam.databases[0].is_neighbor_of(&fam.databases[1]));
        assert_eq!(fam.databases[0].len(), 10);
        assert!(matches!(linear_separation_pair(1.0, 10, 0.05), Err(Error::Precondition(_))));
    }

    #[test]
    fn linear_pair_solver_matches_closed_form() {
        let fam = linear_separation_pair(1.0, 10, 0.04).unwrap();
        let w1 = linear_weights(&fam.databases[0], 1.0).unwrap()[0];
        let w2 = linear_weights(&fam.databases[1], 1.0).unwrap()[0];
        assert!((w1 - 0.68).abs() < 1e-6);
        assert!((w2 - 0.76).abs() < 1e-6);
        let d = pair_weight_distance(&fam.databases[0], &fam.databases[1], 1.0).unwrap();
        assert!(d <= sensitivity_bound(1.0, 1.0, 0.8, 1, 10).unwrap());
    }

    #[test]
    fn identical_replacement_has_zero_distance() {
        let gen = DatabaseGenerator { n: 6, domain: DomainBox::symmetric(2, 1.0).unwrap() };
        let db = gen.database(&mut seeded(4)).unwrap();
        let same = db.replace_last(db.last().clone()).unwrap();
        assert_eq!(pair_weight_distance(&db, &same, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn non_neighbors_rejected() {
        let gen = DatabaseGenerator { n: 6, domain: DomainBox::symmetric(2, 1.0).unwrap() };
        let a = gen.database(&mut seeded(1)).unwrap();
        let b = gen.database(&mut seeded(2)).unwrap();
        assert!(matches!(pair_weight_distance(&a, &b, 1.0), Err(Error::NotNeighbors(_))));
        let m = PrivacyMechanism::Finite { c: 1.0, lambda: 1.0 };
        assert!(matches!(privacy_ratio_audit(&a, &b, m, 1.0, 10, 5, 0, 0), Err(Error::NotNeighbors(_))));
    }

    #[test]
    fn packing_family_shape() {
        let fam = rbf_packing_family(1.0, 8, 0.3).unwrap();
        assert_eq!(fam.databases.len(), 11);
        for (i, a) in fam.databases.iter().enumerate() {
            for b in &fam.databases[i + 1..] {
                assert!(a.is_neighbor_of(b));
            }
        }
        assert!(matches!(rbf_packing_family(1.0, 1, 0.3), Err(Error::InvalidParameter { .. })));
        assert!(matches!(rbf_packing_family(8.0, 8, 0.3), Err(Error::Precondition(_))));
        assert!(matches!(rbf_packing_family(1.0, 8, 0.9), Err(Error::Precondition(_))));
    }

    #[test]
    fn sup_norm_examples() {
        let b = DomainBox::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        let f = |x: &[f64]| Ok(x[0]);
        let zero = |_: &[f64]| Ok(0.0);
        assert_eq!(sup_norm_distance(f, f, &b, 11).unwrap(), 0.0);
        assert_eq!(sup_norm_distance(f, zero, &b, 11).unwrap(), 1.0);
        let smooth = |x: &[f64]| Ok((3.0 * x[0]).sin() * x[1].cos());
        let coarse = sup_norm_distance(smooth, zero, &b, 2).unwrap();
        let fine = sup_norm_distance(smooth, zero, &b, 101).unwrap();
        assert!(coarse <= fine);
        assert!(sup_norm_distance(f, zero, &b, 1).is_err());
    }

    #[test]
    fn kernel_audit_trivial_directions() {
        let b = DomainBox::symmetric(1, 1.0).unwrap();
        let k = KernelSpec::Rbf { sigma: 1.0 };
        let wide = kernel_approx_audit(k, 3, &b, 2.0, 20, None, 5).unwrap();
        assert_eq!(wide.statistic, 0.0);
        let tight = kernel_approx_audit(k, 1, &b, 0.01, 50, None, 5).unwrap();
        assert!(tight.statistic > 0.9);
        assert_eq!(tight.bound, 1.0);
        assert_eq!(tight.details["vacuous"], Value::Bool(true));
        assert!(kernel_approx_audit(KernelSpec::Linear, 3, &b, 0.1, 1, None, 0).is_err());
    }

    #[test]
    fn audits_reproducible() {
        let gen = DatabaseGenerator { n: 8, domain: DomainBox::symmetric(2, 1.0).unwrap() };
        let a = sensitivity_audit(&gen, 20, 1.0, 42).unwrap();
        let b = sensitivity_audit(&gen, 20, 1.0, 42).unwrap();
        assert_eq!(a, b);
        assert!(a.pass);
        let json = a.to_json().unwrap();
        assert!(json.starts_with("{\n  \"audit\": {"));
    }

    #[test]
    fn utility_rejects_infinite_eps() {
        let gen = DatabaseGenerator { n: 8, domain: DomainBox::symmetric(2, 1.0).unwrap() };
        let db = gen.database(&mut seeded(3)).unwrap();
        let m = UtilityMechanism::Finite { c: 1.0, lambda: 0.1 };
        assert!(utility_audit(&db, m, &gen.domain, f64::INFINITY, 0.1, 5, None, 0).is_err());
    }

    #[test]
    fn privacy_identical_databases_near_zero() {
        let fam = linear_separation_pair(1.0, 10, 0.04).unwrap();
        let d = &fam.databases[0];
        let m = PrivacyMechanism::Finite { c: 1.0, lambda: 0.32 };
        let r = privacy_ratio_audit(d, d, m, 1.0, 20_000, 20, 0, 8).unwrap();
        assert!(r.statistic < 0.5, "{}", r.statistic);
    }
}
