//! Hinge-loss SVM training through its bias-free dual
//!
//! ```text
//! maximize   Σᵢ αᵢ − ½ Σᵢⱼ αᵢ αⱼ yᵢ yⱼ k(xᵢ, xⱼ)
//! subject to 0 ≤ αᵢ ≤ C/n
//! ```
//!
//! solved by cyclic projected coordinate ascent. Without an intercept there is
//! no equality constraint, so each single-coordinate step is an exact line
//! maximisation followed by clipping to the box.

use crate::data::Database;
use crate::error::{require_dim, require_positive, Error, Result};
use crate::kernels::{Kernel, KernelSpec};

const DEGENERATE_DIAGONAL: f64 = 1e-15;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverOptions {
    /// Largest acceptable KKT residual at exit.
    pub tol: f64,
    pub max_sweeps: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_sweeps: 1_000_000,
        }
    }
}

/// Dense symmetric kernel matrix over the training points.
#[derive(Clone, Debug, PartialEq)]
pub struct GramMatrix {
    n: usize,
    values: Vec<f64>,
}

impl GramMatrix {
    pub fn from_kernel<K: Kernel + ?Sized>(db: &Database, kernel: &K) -> Result<Self> {
        let pts: Vec<&[f64]> = db.points().collect();
        let n = pts.len();
        let mut values = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v = kernel.eval(pts[i], pts[j])?;
                values[i * n + j] = v;
                values[j * n + i] = v;
            }
        }
        Ok(Self { n, values })
    }

    /// Gram matrix of explicit feature vectors, `K = Φ Φᵀ`.
    pub fn from_features(features: &[Vec<f64>]) -> Self {
        let n = features.len();
        let mut values = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v: f64 = features[i].iter().zip(&features[j]).map(|(a, b)| a * b).sum();
                values[i * n + j] = v;
                values[j * n + i] = v;
            }
        }
        Self { n, values }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }
}

/// State of the coordinate-ascent iteration. Exposed so callers can observe
/// the iterate sweep by sweep; [`solve_dual`] drives it to convergence.
#[derive(Clone, Debug)]
pub struct CoordinateAscent<'a> {
    gram: &'a GramMatrix,
    signs: &'a [f64],
    upper: f64,
    alphas: Vec<f64>,
    // margins[i] = yᵢ Σⱼ αⱼ yⱼ Kᵢⱼ, so the gradient is 1 − margins[i].
    margins: Vec<f64>,
    sweeps: usize,
}

impl<'a> CoordinateAscent<'a> {
    pub fn new(gram: &'a GramMatrix, signs: &'a [f64], c: f64) -> Result<Self> {
        require_positive("C", c)?;
        require_dim(gram.len(), signs.len())?;
        let n = signs.len();
        if n <= 1 {
            return Err(Error::Size { n });
        }
        Ok(Self {
            gram,
            signs,
            upper: c / n as f64,
            alphas: vec![0.0; n],
            margins: vec![0.0; n],
            sweeps: 0,
        })
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn upper_bound(&self) -> f64 {
        self.upper
    }

    pub fn sweeps(&self) -> usize {
        self.sweeps
    }

    /// One pass over coordinates `0..n` in order.
    pub fn sweep(&mut self) {
        let n = self.alphas.len();
        for i in 0..n {
            let grad = 1.0 - self.margins[i];
            let kii = self.gram.get(i, i);
            let old = self.alphas[i];
            let new = if kii <= DEGENERATE_DIAGONAL {
                // Objective is linear in αᵢ here.
                if grad > 0.0 {
                    self.upper
                } else if grad < 0.0 {
                    0.0
                } else {
                    old
                }
            } else {
                (old + grad / kii).clamp(0.0, self.upper)
            };
            let step = new - old;
            if step != 0.0 {
                self.alphas[i] = new;
                let yi = self.signs[i];
                let row = self.gram.row(i);
                for j in 0..n {
                    self.margins[j] += step * yi * self.signs[j] * row[j];
                }
            }
        }
        self.refresh_margins();
        self.sweeps += 1;
    }

    fn refresh_margins(&mut self) {
        let n = self.alphas.len();
        for i in 0..n {
            let row = self.gram.row(i);
            let s: f64 = (0..n).map(|j| self.alphas[j] * self.signs[j] * row[j]).sum();
            self.margins[i] = self.signs[i] * s;
        }
    }

    /// Dual objective `Σ αᵢ − ½ Σ αᵢ αⱼ yᵢ yⱼ Kᵢⱼ` at the current iterate.
    pub fn objective(&self) -> f64 {
        self.alphas
            .iter()
            .zip(&self.margins)
            .map(|(a, m)| a - 0.5 * a * m)
            .sum()
    }

    /// Largest violation of the box-constrained optimality conditions:
    /// `gᵢ ≤ 0` at the lower bound, `gᵢ ≥ 0` at the upper bound and `gᵢ = 0`
    /// strictly inside, with `gᵢ = 1 − yᵢ Σⱼ αⱼ yⱼ Kᵢⱼ`.
    pub fn kkt_residual(&self) -> f64 {
        kkt_residual_of(&self.alphas, &self.margins, self.upper)
    }
}

fn kkt_residual_of(alphas: &[f64], margins: &[f64], upper: f64) -> f64 {
    alphas
        .iter()
        .zip(margins)
        .map(|(&a, &m)| {
            let g = 1.0 - m;
            if a <= 0.0 {
                g.max(0.0)
            } else if a >= upper {
                (-g).max(0.0)
            } else {
                g.abs()
            }
        })
        .fold(0.0, f64::max)
}

/// Converged dual variables for an arbitrary Gram matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DualSolution {
    pub alphas: Vec<f64>,
    pub objective: f64,
    pub kkt_residual: f64,
    pub sweeps: usize,
}

pub fn solve_dual(
    gram: &GramMatrix,
    signs: &[f64],
    c: f64,
    opts: SolverOptions,
) -> Result<DualSolution> {
    require_positive("tol", opts.tol)?;
    let mut state = CoordinateAscent::new(gram, signs, c)?;
    loop {
        state.sweep();
        let residual = state.kkt_residual();
        if residual <= opts.tol {
            return Ok(DualSolution {
                objective: state.objective(),
                kkt_residual: residual,
                sweeps: state.sweeps,
                alphas: state.alphas,
            });
        }
        if state.sweeps >= opts.max_sweeps {
            return Err(Error::Convergence {
                sweeps: state.sweeps,
                residual,
                alphas: state.alphas,
            });
        }
    }
}

/// A trained (non-private) kernel SVM.
#[derive(Clone, Debug, PartialEq)]
pub struct SvmModel {
    pub alphas: Vec<f64>,
    pub support: Database,
    pub kernel: KernelSpec,
    pub c: f64,
    pub objective: f64,
    pub kkt_residual: f64,
}

pub fn solve_svm_dual(
    db: &Database,
    kernel: KernelSpec,
    c: f64,
    opts: SolverOptions,
) -> Result<SvmModel> {
    kernel.validate()?;
    let gram = GramMatrix::from_kernel(db, &kernel)?;
    let signs = db.signs();
    let sol = solve_dual(&gram, &signs, c, opts)?;
    Ok(SvmModel {
        alphas: sol.alphas,
        support: db.clone(),
        kernel,
        c,
        objective: sol.objective,
        kkt_residual: sol.kkt_residual,
    })
}

impl SvmModel {
    /// `f(x) = Σᵢ αᵢ yᵢ k(x, xᵢ)`.
    pub fn decision(&self, x: &[f64]) -> Result<f64> {
        require_dim(self.support.dim(), x.len())?;
        Ok(self
            .alphas
            .iter()
            .zip(self.support.entries())
            .map(|(a, e)| a * e.y.sign() * self.kernel.eval_unchecked(x, &e.x))
            .sum())
    }

    /// `w = Σᵢ αᵢ yᵢ φ(xᵢ)` for an explicit feature map `φ` whose induced
    /// kernel is the model's kernel.
    pub fn primal_weights<F>(&self, features: F) -> Result<PrimalWeights>
    where
        F: Fn(&[f64]) -> Result<Vec<f64>>,
    {
        weighted_feature_sum(&self.alphas, &self.support, features)
    }
}

pub(crate) fn weighted_feature_sum<F>(
    alphas: &[f64],
    db: &Database,
    features: F,
) -> Result<PrimalWeights>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let mut w: Option<Vec<f64>> = None;
    for (a, e) in alphas.iter().zip(db.entries()) {
        let phi = features(&e.x)?;
        let acc = w.get_or_insert_with(|| vec![0.0; phi.len()]);
        require_dim(acc.len(), phi.len())?;
        let coef = a * e.y.sign();
        for (wk, pk) in acc.iter_mut().zip(&phi) {
            *wk += coef * pk;
        }
    }
    Ok(PrimalWeights(w.unwrap_or_default()))
}

/// Primal weight vector `w` of a linear classifier in feature space.
#[derive(Clone, Debug, PartialEq)]
pub struct PrimalWeights(pub Vec<f64>);

impl PrimalWeights {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `⟨w, φ(x)⟩`.
    pub fn decision<F>(&self, features: F, x: &[f64]) -> Result<f64>
    where
        F: Fn(&[f64]) -> Result<Vec<f64>>,
    {
        let phi = features(x)?;
        require_dim(self.0.len(), phi.len())?;
        Ok(self.0.iter().zip(&phi).map(|(w, p)| w * p).sum())
    }

    pub fn l1_distance(&self, other: &PrimalWeights) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| (a - b).abs()).sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// The identity feature map `φ(x) = x`, whose induced kernel is the linear one.
pub fn identity_features(x: &[f64]) -> Result<Vec<f64>> {
    Ok(x.to_vec())
}
