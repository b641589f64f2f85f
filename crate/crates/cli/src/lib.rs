//! Command-line front end. [`run`] parses arguments, does the work and returns
//! the process exit code: 0 on success, 1 when a computation fails, 2 on a
//! usage error. Results go to `out` as JSON (17 significant digits for reals),
//! diagnostics to `err`.
//!
//! Every randomized subcommand requires `--seed`. A fixed seed makes runs
//! reproducible for testing, but reusing a seed for a real release repeats
//! the noise and voids the privacy guarantee.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use dpsvm::audit::{
    kernel_approx_audit, privacy_ratio_audit, rbf_packing_separation_audit, sensitivity_audit,
    utility_audit, AuditReport, DatabaseGenerator, PrivacyMechanism, UtilityMechanism,
};
use dpsvm::mechanisms::{
    calibrate_finite_hinge, calibrate_rff_dim_hinge, calibrate_rff_hinge,
    optimal_dp_lower_bound_linear, optimal_dp_lower_bound_rbf, optimal_dp_upper_bound_hinge,
    Claims, PrivateModel,
};
use dpsvm::numfmt::to_json_string;
use dpsvm::rng::seeded;
use dpsvm::{
    bounding_box, load_csv, load_model, save_model, train_private_finite, train_private_rff,
    train_svm, Database, DomainBox, KernelSpec, LoadedModel,
};

#[derive(Debug, Parser)]
#[command(name = "dpsvm", version, about = "Differentially private SVM training and audits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train an exact (non-private) SVM.
    Train {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        kernel: KernelArgs,
        #[arg(long)]
        c: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Private linear SVM: exact weights plus Laplace noise.
    PrivateTrainFinite {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        c: f64,
        #[arg(long)]
        lambda: f64,
        #[command(flatten)]
        claims: ClaimArgs,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Private kernel SVM through random Fourier features.
    PrivateTrainRff {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        kernel: KernelArgs,
        #[arg(long)]
        c: f64,
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        d_hat: usize,
        #[command(flatten)]
        claims: ClaimArgs,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Privacy/utility window for the noise scale.
    Calibrate(CalibrateArgs),
    /// Empirical checks of the guarantees.
    Audit(AuditArgs),
    /// Decision values and signs for every row of a CSV file.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        data: DataArgs,
    },
    /// Bounds on the best achievable privacy level.
    Bounds(BoundsArgs),
}

#[derive(Debug, Args)]
struct DataArgs {
    /// CSV: feature columns followed by a label in {-1, 1, +1}.
    #[arg(long)]
    data: PathBuf,
    /// The first CSV row is a header.
    #[arg(long)]
    header: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum KernelName {
    Linear,
    Rbf,
    Laplacian,
    Cauchy,
}

#[derive(Debug, Args)]
struct KernelArgs {
    #[arg(long, value_enum, default_value = "linear")]
    kernel: KernelName,
    /// RBF bandwidth.
    #[arg(long)]
    sigma: Option<f64>,
}

impl KernelArgs {
    fn spec(&self) -> Result<KernelSpec, CliError> {
        kernel_spec(self.kernel, self.sigma)
    }
}

fn kernel_spec(name: KernelName, sigma: Option<f64>) -> Result<KernelSpec, CliError> {
    match (name, sigma) {
        (KernelName::Rbf, Some(s)) => KernelSpec::rbf(s).map_err(|e| CliError::Usage(e.to_string())),
        (KernelName::Rbf, None) => Err(CliError::Usage("--kernel rbf requires --sigma".into())),
        (_, Some(_)) => Err(CliError::Usage("--sigma only applies to --kernel rbf".into())),
        (KernelName::Linear, None) => Ok(KernelSpec::Linear),
        (KernelName::Laplacian, None) => Ok(KernelSpec::Laplacian),
        (KernelName::Cauchy, None) => Ok(KernelSpec::Cauchy),
    }
}

/// Guarantees to record in the model file.
#[derive(Debug, Args)]
struct ClaimArgs {
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    phi: Option<f64>,
}

impl ClaimArgs {
    fn apply(&self, mut claims: Claims) -> Claims {
        claims.beta = self.beta;
        claims.epsilon = self.eps;
        claims.delta = self.delta;
        claims.kappa = self.kappa;
        claims.phi = self.phi;
        claims
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum MechanismName {
    Finite,
    Rff,
}

#[derive(Debug, Args)]
struct CalibrateArgs {
    #[arg(long, value_enum)]
    mechanism: MechanismName,
    #[arg(long)]
    beta: f64,
    #[arg(long)]
    eps: f64,
    #[arg(long)]
    delta: f64,
    #[arg(long)]
    c: f64,
    #[arg(long)]
    n: usize,
    /// Input dimension (the feature count for the finite map).
    #[arg(long)]
    dim: usize,
    /// Finite map: largest input norm on the domain.
    #[arg(long)]
    kappa: Option<f64>,
    /// Finite map: largest absolute coordinate on the domain.
    #[arg(long)]
    phi: Option<f64>,
    /// Random features: kernel family (default rbf).
    #[arg(long, value_enum, default_value = "rbf")]
    kernel: KernelName,
    #[arg(long)]
    sigma: Option<f64>,
    /// Random features: domain diameter.
    #[arg(long)]
    diam: Option<f64>,
    /// Random features: use this d̂ instead of the calibrated one.
    #[arg(long)]
    d_hat: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum AuditKind {
    Sensitivity,
    Utility,
    KernelApprox,
    Privacy,
    Separation,
}

#[derive(Debug, Args)]
struct AuditArgs {
    #[arg(long, value_enum)]
    kind: AuditKind,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    dim: Option<usize>,
    /// Domain is the cube [-radius, radius]^dim (default: the data's bounding box).
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long)]
    data: Option<PathBuf>,
    /// Second database for the privacy audit.
    #[arg(long)]
    data2: Option<PathBuf>,
    #[arg(long)]
    header: bool,
    #[arg(long, value_enum)]
    mechanism: Option<MechanismName>,
    #[arg(long, value_enum)]
    kernel: Option<KernelName>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    d_hat: Option<usize>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    bins: Option<usize>,
    #[arg(long)]
    coordinate: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum LowerKind {
    Linear,
    Rbf,
}

#[derive(Debug, Args)]
struct BoundsArgs {
    #[arg(long, value_enum, required_unless_present = "upper")]
    lower: Option<LowerKind>,
    /// Report the achievable upper bound for the random-feature mechanism instead.
    #[arg(long, conflicts_with = "lower")]
    upper: bool,
    #[arg(long)]
    delta: f64,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    diam: Option<f64>,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Compute(dpsvm::Error),
}

impl From<dpsvm::Error> for CliError {
    fn from(e: dpsvm::Error) -> Self {
        CliError::Compute(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Compute(e.into())
    }
}

fn need<T>(v: Option<T>, flag: &str) -> Result<T, CliError> {
    v.ok_or_else(|| CliError::Usage(format!("{flag} is required here")))
}

fn need_seed(seed: Option<u64>) -> Result<u64, CliError> {
    seed.ok_or_else(|| {
        CliError::Usage("randomized commands require an explicit --seed (never reuse one for a real release)".into())
    })
}

fn read_db(path: &Path, header: bool) -> Result<Database, CliError> {
    let file = File::open(path).map_err(|e| {
        CliError::Compute(dpsvm::Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
    })?;
    Ok(load_csv(BufReader::new(file), header)?)
}

fn emit(out: &mut dyn Write, value: &Value) -> Result<(), CliError> {
    writeln!(out, "{}", to_json_string(value)?)?;
    Ok(())
}

/// Runs the CLI with `args` (including the program name) and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(out, "{e}");
                0
            } else {
                let _ = write!(err, "{e}");
                2
            };
        }
    };
    match dispatch(cli.command, out) {
        Ok(()) => 0,
        Err(CliError::Usage(msg)) => {
            let _ = writeln!(err, "usage error: {msg}");
            2
        }
        Err(CliError::Compute(e)) => {
            let _ = writeln!(err, "error: {e}");
            1
        }
    }
}

fn dispatch(command: Command, out: &mut dyn Write) -> Result<(), CliError> {
    match command {
        Command::Train { data, kernel, c, out: path } => {
            let k = kernel.spec()?;
            let db = read_db(&data.data, data.header)?;
            let model = train_svm(&db, k, c)?;
            let summary = json!({
                "mechanism": "svm",
                "n": db.len(),
                "dim": db.dim(),
                "objective": model.objective,
                "kkt_residual": model.kkt_residual,
                "out": path.display().to_string(),
            });
            save_model(&model.into(), &path)?;
            emit(out, &summary)
        }
        Command::PrivateTrainFinite { data, c, lambda, claims, seed, out: path } => {
            let seed = need_seed(seed)?;
            let db = read_db(&data.data, data.header)?;
            let model = train_private_finite(&db, c, lambda, &mut seeded(seed))?;
            let model = model.clone().with_claims(claims.apply(model.claimed));
            write_private(out, model, &path)
        }
        Command::PrivateTrainRff { data, kernel, c, lambda, d_hat, claims, seed, out: path } => {
            let seed = need_seed(seed)?;
            let k = kernel.spec()?;
            if !k.translation_invariant() {
                return Err(CliError::Usage("private-train-rff needs a translation-invariant --kernel".into()));
            }
            let db = read_db(&data.data, data.header)?;
            let model = train_private_rff(&db, k, c, lambda, d_hat, &mut seeded(seed))?;
            let model = model.clone().with_claims(claims.apply(model.claimed));
            write_private(out, model, &path)
        }
        Command::Calibrate(a) => calibrate(a, out),
        Command::Audit(a) => audit(a, out),
        Command::Predict { model, data } => {
            let m = load_model(&model)?;
            let db = read_db(&data.data, data.header)?;
            if db.dim() != m.dim() {
                return Err(dpsvm::Error::DimensionMismatch { expected: m.dim(), found: db.dim() }.into());
            }
            for x in db.points() {
                // `+ 0.0` folds a negative zero into +0 so ties print uniformly.
                let v = m.decision(x)? + 0.0;
                let sign = if v < 0.0 { "-1" } else { "+1" };
                writeln!(out, "{} {sign}", dpsvm::numfmt::format_real(v))?;
            }
            Ok(())
        }
        Command::Bounds(a) => bounds(a, out),
    }
}

fn write_private(out: &mut dyn Write, model: PrivateModel, path: &Path) -> Result<(), CliError> {
    let summary = json!({
        "lambda": model.lambda,
        "weights": model.w_hat.len(),
        "out": path.display().to_string(),
    });
    save_model(&LoadedModel::Private(model), path)?;
    emit(out, &summary)
}

fn calibrate(a: CalibrateArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let report = match a.mechanism {
        MechanismName::Finite => {
            let kappa = need(a.kappa, "--kappa")?;
            let phi = need(a.phi, "--phi")?;
            calibrate_finite_hinge(a.c, kappa, phi, a.dim, a.n, a.beta, a.eps, a.delta)?
        }
        MechanismName::Rff => {
            let k = kernel_spec(a.kernel, a.sigma)?;
            if !k.translation_invariant() {
                return Err(CliError::Usage("--mechanism rff needs a translation-invariant --kernel".into()));
            }
            let d_hat = match a.d_hat {
                Some(d) => d,
                None => {
                    let diam = need(a.diam, "--diam (or --d-hat)")?;
                    let sigma_p = k.spectral_second_moment(a.dim)?.root();
                    calibrate_rff_dim_hinge(a.eps, a.delta, a.c, a.dim, sigma_p, diam)?
                }
            };
            calibrate_rff_hinge(a.c, d_hat, a.n, a.beta, a.eps, a.delta)?
        }
    };
    emit(out, &json!({ "calibration": report }))
}

fn domain_for(a: &AuditArgs, db: Option<&Database>) -> Result<DomainBox, CliError> {
    match (a.radius, db) {
        (Some(r), Some(db)) => Ok(DomainBox::symmetric(db.dim(), r)?),
        (Some(r), None) => Ok(DomainBox::symmetric(need(a.dim, "--dim")?, r)?),
        (None, Some(db)) => Ok(bounding_box(db, 0.0)?),
        (None, None) => Err(CliError::Usage("--radius is required here".into())),
    }
}

fn audit(a: AuditArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let report: AuditReport = match a.kind {
        AuditKind::Sensitivity => {
            let seed = need_seed(a.seed)?;
            let gen = DatabaseGenerator { n: need(a.n, "--n")?, domain: domain_for(&a, None)? };
            sensitivity_audit(&gen, a.trials.unwrap_or(500), need(a.c, "--c")?, seed)?
        }
        AuditKind::Utility => {
            let seed = need_seed(a.seed)?;
            let mechanism = utility_mechanism(&a)?;
            let db = read_db(&need(a.data.clone(), "--data")?, a.header)?;
            let domain = domain_for(&a, Some(&db))?;
            utility_audit(
                &db,
                mechanism,
                &domain,
                need(a.eps, "--eps")?,
                need(a.delta, "--delta")?,
                a.trials.unwrap_or(500),
                a.grid,
                seed,
            )?
        }
        AuditKind::KernelApprox => {
            let seed = need_seed(a.seed)?;
            let k = kernel_spec(need(a.kernel, "--kernel")?, a.sigma)?;
            let domain = domain_for(&a, None)?;
            kernel_approx_audit(k, need(a.d_hat, "--d-hat")?, &domain, need(a.eps, "--eps")?, a.trials.unwrap_or(200), a.grid, seed)?
        }
        AuditKind::Privacy => {
            let seed = need_seed(a.seed)?;
            let mechanism = match need(a.mechanism, "--mechanism")? {
                MechanismName::Finite => PrivacyMechanism::Finite { c: need(a.c, "--c")?, lambda: need(a.lambda, "--lambda")? },
                MechanismName::Rff => PrivacyMechanism::Rff {
                    kernel: kernel_spec(need(a.kernel, "--kernel")?, a.sigma)?,
                    c: need(a.c, "--c")?,
                    lambda: need(a.lambda, "--lambda")?,
                    d_hat: need(a.d_hat, "--d-hat")?,
                    map_seed: seed,
                },
            };
            let d1 = read_db(&need(a.data.clone(), "--data")?, a.header)?;
            let d2 = read_db(&need(a.data2.clone(), "--data2")?, a.header)?;
            privacy_ratio_audit(
                &d1,
                &d2,
                mechanism,
                need(a.beta, "--beta")?,
                a.trials.unwrap_or(100_000),
                a.bins.unwrap_or(40),
                a.coordinate.unwrap_or(0),
                seed,
            )?
        }
        AuditKind::Separation => {
            rbf_packing_separation_audit(need(a.c, "--c")?, need(a.n, "--n")?, need(a.sigma, "--sigma")?)?
        }
    };
    writeln!(out, "{}", report.to_json()?)?;
    Ok(())
}

fn utility_mechanism(a: &AuditArgs) -> Result<UtilityMechanism, CliError> {
    let c = need(a.c, "--c")?;
    let lambda = need(a.lambda, "--lambda")?;
    Ok(match need(a.mechanism, "--mechanism")? {
        MechanismName::Finite => UtilityMechanism::Finite { c, lambda },
        MechanismName::Rff => UtilityMechanism::Rff {
            kernel: kernel_spec(need(a.kernel, "--kernel")?, a.sigma)?,
            c,
            lambda,
            d_hat: need(a.d_hat, "--d-hat")?,
        },
    })
}

fn bounds(a: BoundsArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let value = if a.upper {
        let sigma = need(a.sigma, "--sigma")?;
        let dim = need(a.dim, "--dim")?;
        let k = KernelSpec::rbf(sigma).map_err(|e| CliError::Usage(e.to_string()))?;
        let report = optimal_dp_upper_bound_hinge(
            need(a.eps, "--eps")?,
            a.delta,
            need(a.c, "--c")?,
            need(a.n, "--n")?,
            dim,
            k.spectral_second_moment(dim)?.root(),
            need(a.diam, "--diam")?,
        )?;
        json!({ "upper": report })
    } else {
        match need(a.lower, "--lower")? {
            LowerKind::Linear => json!({ "lower": { "kernel": "linear", "bound": optimal_dp_lower_bound_linear(a.delta)? } }),
            LowerKind::Rbf => {
                let (big_n, bound) = optimal_dp_lower_bound_rbf(a.delta, need(a.sigma, "--sigma")?)?;
                json!({ "lower": { "kernel": "rbf", "N": big_n, "bound": bound } })
            }
        }
    };
    emit(out, &value)
}
