//! Differentially private support vector machines by output perturbation.
//!
//! Train a hinge-loss SVM exactly, then release its primal weight vector with
//! Laplace noise added. Linear models use the inputs as features directly;
//! translation-invariant kernels (RBF, Laplacian, Cauchy) go through a random
//! Fourier feature map so the released object is a finite vector.
//!
//! The [`mechanisms`] module also hosts the closed-form noise, feature-count
//! and privacy-level formulas; [`audit`] checks them empirically.

pub mod audit;
pub mod data;
pub mod error;
pub mod kernels;
pub mod mechanisms;
pub mod model_file;
pub mod noise;
pub mod numfmt;
pub mod rff;
pub mod rng;
pub mod solver;

pub use data::{bounding_box, load_csv, Database, DomainBox, Example, Label};
pub use error::{Error, Result};
pub use kernels::{Kernel, KernelSpec, SecondMoment};
pub use mechanisms::{
    train_private_finite, train_private_rff, train_svm, Claims, FeatureMap, PrivateModel,
};
pub use model_file::{load_model, save_model, LoadedModel};
pub use rff::{calibrate_rff_dim, RandomFeatureMap};
pub use solver::{solve_svm_dual, SolverOptions, SvmModel};
