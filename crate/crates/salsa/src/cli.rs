//! Command-line parsing into validated run configurations.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use salsa_core::bench::{ExperimentId, ExperimentSpec, MuSetting, StopSpec};
use salsa_core::{BlurKind, BlurParams, Regularizer, SolverConfig, SolverKind};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Clap(#[from] clap::Error),
    #[error("invalid value for {flag}: {message}")]
    Invalid { flag: &'static str, message: String },
}

impl CliError {
    /// The flag a validation error is about.
    pub fn flag(&self) -> Option<&'static str> {
        match self {
            CliError::Invalid { flag, .. } => Some(flag),
            CliError::Clap(_) => None,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Clap(e) => e.exit_code(),
            CliError::Invalid { .. } => 2,
        }
    }
}

fn invalid(flag: &'static str, message: impl Into<String>) -> CliError {
    CliError::Invalid {
        flag,
        message: message.into(),
    }
}

#[derive(Debug, Clone)]
pub enum Command {
    Run(RunConfig),
    Deblur(DeblurConfig),
    PsfDump(PsfDumpConfig),
}

/// Degrade a clean image per an experiment preset and restore it.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub spec: ExperimentSpec,
    /// Clean image; the synthetic scene when absent.
    pub image: Option<PathBuf>,
    pub out: PathBuf,
}

/// Restore an already blurred and noisy image.
#[derive(Debug, Clone)]
pub struct DeblurConfig {
    pub spec: ExperimentSpec,
    pub image: PathBuf,
    pub reference: Option<PathBuf>,
    pub out: PathBuf,
}

#[derive(Debug, Clone)]
pub struct PsfDumpConfig {
    pub blur: BlurKind,
    pub params: BlurParams,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BlurArg {
    Uniform9,
    Gaussian,
    Invquad,
}

impl From<BlurArg> for BlurKind {
    fn from(b: BlurArg) -> Self {
        match b {
            BlurArg::Uniform9 => BlurKind::Uniform,
            BlurArg::Gaussian => BlurKind::Gaussian,
            BlurArg::Invquad => BlurKind::InverseQuadratic,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SolverArg {
    Salsa,
    Ist,
    Fista,
}

impl From<SolverArg> for SolverKind {
    fn from(s: SolverArg) -> Self {
        match s {
            SolverArg::Salsa => SolverKind::Salsa,
            SolverArg::Ist => SolverKind::Ist,
            SolverArg::Fista => SolverKind::Fista,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TargetArg {
    Auto,
    Value(f64),
}

fn parse_experiment(s: &str) -> Result<ExperimentId, String> {
    s.parse()
        .map_err(|_| format!("unknown experiment id {s:?} (expected 1, 2A, 2B, 3A or 3B)"))
}

fn parse_mu(s: &str) -> Result<MuSetting, String> {
    if s.eq_ignore_ascii_case("auto") {
        return Ok(MuSetting::Auto);
    }
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() && v > 0.0 => Ok(MuSetting::Value(v)),
        Ok(_) => Err("must be positive and finite".into()),
        Err(_) => Err(format!("expected a number or `auto`, got {s:?}")),
    }
}

fn parse_target(s: &str) -> Result<TargetArg, String> {
    if s.eq_ignore_ascii_case("auto") {
        return Ok(TargetArg::Auto);
    }
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(TargetArg::Value(v)),
        _ => Err(format!("expected a finite number or `auto`, got {s:?}")),
    }
}

#[derive(Debug, Parser)]
#[command(name = "salsa", version, about = "Frame-based image deblurring with SALSA, IST and FISTA")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Debug, Subcommand)]
enum Sub {
    /// Blur and add noise to an image per an experiment preset, then restore it.
    Run(RunArgs),
    /// Restore an observed (already degraded) image.
    Deblur(DeblurArgs),
    /// Print the kernel taps of a blur as CSV.
    PsfDump(PsfArgs),
}

#[derive(Debug, Args)]
struct SolveArgs {
    /// Regularization weight.
    #[arg(long)]
    tau: Option<f64>,
    /// Augmented Lagrangian penalty, or `auto` for 0.1·tau.
    #[arg(long, value_parser = parse_mu)]
    mu: Option<MuSetting>,
    /// Solver to run; repeat for several. Defaults to all.
    #[arg(long = "solver", value_enum)]
    solvers: Vec<SolverArg>,
    #[arg(long)]
    max_iters: Option<usize>,
    /// Relative objective change that ends a run.
    #[arg(long)]
    rel_tol: Option<f64>,
    /// Run every solver down to this objective value; `auto` takes the
    /// value SALSA reaches at rel-tol 1e-6.
    #[arg(long, value_parser = parse_target)]
    target_objective: Option<TargetArg>,
    /// Per-solver limit on iteration seconds.
    #[arg(long)]
    time_limit: Option<f64>,
    /// Frame decomposition depth.
    #[arg(long)]
    levels: Option<usize>,
    /// Leave the coarse approximation band unpenalized.
    #[arg(long)]
    free_approximation: bool,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct KernelArgs {
    /// Kernel support side (odd).
    #[arg(long)]
    psf_size: Option<usize>,
    /// Gaussian kernel width in pixels.
    #[arg(long)]
    psf_sigma: Option<f64>,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long, value_parser = parse_experiment)]
    experiment: ExperimentId,
    /// Clean 8-bit PGM; the built-in 256×256 scene when omitted.
    #[arg(long)]
    image: Option<PathBuf>,
    #[arg(long, value_enum)]
    blur: Option<BlurArg>,
    #[command(flatten)]
    kernel: KernelArgs,
    /// Noise variance in intensity² units.
    #[arg(long)]
    sigma2: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    solve: SolveArgs,
}

#[derive(Debug, Args)]
struct DeblurArgs {
    /// Observed 8-bit PGM.
    #[arg(long)]
    image: PathBuf,
    #[arg(long, value_enum)]
    blur: BlurArg,
    #[command(flatten)]
    kernel: KernelArgs,
    /// Clean image, for ISNR reporting.
    #[arg(long)]
    reference: Option<PathBuf>,
    #[command(flatten)]
    solve: SolveArgs,
}

#[derive(Debug, Args)]
struct PsfArgs {
    #[arg(long, value_enum)]
    blur: BlurArg,
    #[command(flatten)]
    kernel: KernelArgs,
    /// Write here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn existing(flag: &'static str, path: &Path) -> Result<(), CliError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(invalid(flag, format!("{} does not exist", path.display())))
    }
}

fn kernel_params(blur: BlurKind, k: &KernelArgs) -> Result<BlurParams, CliError> {
    let mut params = BlurParams::default_for(blur);
    if let Some(size) = k.psf_size {
        if size == 0 || size.is_multiple_of(2) {
            return Err(invalid("--psf-size", format!("must be odd, got {size}")));
        }
        params.size = size;
    }
    if let Some(sigma) = k.psf_sigma {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(invalid("--psf-sigma", "must be positive"));
        }
        params.sigma = sigma;
    }
    Ok(params)
}

// Applies the shared solver flags on top of `spec`.
fn apply_solve_args(spec: &mut ExperimentSpec, a: &SolveArgs) -> Result<(), CliError> {
    if let Some(tau) = a.tau {
        if !(tau.is_finite() && tau > 0.0) {
            return Err(invalid("--tau", format!("must be positive, got {tau}")));
        }
        spec.tau = tau;
    }
    if let Some(mu) = a.mu {
        spec.mu = mu;
    }
    if !a.solvers.is_empty() {
        let mut solvers: Vec<SolverKind> = Vec::new();
        for &s in &a.solvers {
            let kind = SolverKind::from(s);
            if solvers.contains(&kind) {
                return Err(invalid("--solver", format!("{} given twice", kind.name())));
            }
            solvers.push(kind);
        }
        spec.solvers = solvers;
    }
    if a.max_iters == Some(0) {
        return Err(invalid("--max-iters", "must be at least 1"));
    }
    if let Some(tol) = a.rel_tol {
        if tol.is_nan() || tol < 0.0 {
            return Err(invalid("--rel-tol", "must be nonnegative"));
        }
    }
    if let Some(limit) = a.time_limit {
        if limit.is_nan() || limit <= 0.0 {
            return Err(invalid("--time-limit", "must be positive"));
        }
        spec.time_limit = Some(limit);
    }
    if let Some(levels) = a.levels {
        if levels == 0 {
            return Err(invalid("--levels", "must be at least 1"));
        }
        spec.levels = levels;
    }
    if a.free_approximation {
        spec.regularizer = Regularizer {
            penalize_approximation: false,
            ..spec.regularizer
        };
    }
    let max_iters = a.max_iters.unwrap_or(SolverConfig::DEFAULT_MAX_ITERS);
    spec.stop = match a.target_objective {
        None => StopSpec::RelTol {
            rel_tol: a.rel_tol.unwrap_or(SolverConfig::DEFAULT_REL_TOL),
            max_iters,
        },
        Some(TargetArg::Auto) => StopSpec::Target {
            target: None,
            reference_rel_tol: a.rel_tol.unwrap_or(StopSpec::REFERENCE_REL_TOL),
            reference_max_iters: max_iters,
            max_iters,
        },
        Some(TargetArg::Value(t)) => {
            if a.rel_tol.is_some() {
                return Err(invalid("--rel-tol", "has no effect with an explicit --target-objective"));
            }
            StopSpec::Target {
                target: Some(t),
                reference_rel_tol: StopSpec::REFERENCE_REL_TOL,
                reference_max_iters: max_iters,
                max_iters,
            }
        }
    };
    Ok(())
}

fn build(cli: Cli) -> Result<Command, CliError> {
    match cli.command {
        Sub::Run(a) => {
            let mut spec = ExperimentSpec::preset(a.experiment);
            if let Some(blur) = a.blur {
                spec.blur = blur.into();
                spec.blur_params = BlurParams::default_for(spec.blur);
            }
            spec.blur_params = kernel_params(spec.blur, &a.kernel)?;
            if let Some(s2) = a.sigma2 {
                if !(s2.is_finite() && s2 >= 0.0) {
                    return Err(invalid("--sigma2", "must be nonnegative"));
                }
                spec.noise_variance = s2;
            }
            if let Some(seed) = a.seed {
                spec.seed = seed;
            }
            apply_solve_args(&mut spec, &a.solve)?;
            if let Some(p) = &a.image {
                existing("--image", p)?;
            }
            Ok(Command::Run(RunConfig {
                spec,
                image: a.image,
                out: a.solve.out,
            }))
        }
        Sub::Deblur(a) => {
            if a.solve.tau.is_none() {
                return Err(invalid("--tau", "deblur needs an explicit regularization weight"));
            }
            let blur = BlurKind::from(a.blur);
            let mut spec = ExperimentSpec {
                id: "deblur".to_owned(),
                blur,
                blur_params: kernel_params(blur, &a.kernel)?,
                noise_variance: 0.0,
                seed: 0,
                ..ExperimentSpec::preset(ExperimentId::E1)
            };
            apply_solve_args(&mut spec, &a.solve)?;
            existing("--image", &a.image)?;
            if let Some(p) = &a.reference {
                existing("--reference", p)?;
            }
            Ok(Command::Deblur(DeblurConfig {
                spec,
                image: a.image,
                reference: a.reference,
                out: a.solve.out,
            }))
        }
        Sub::PsfDump(a) => {
            let blur = BlurKind::from(a.blur);
            Ok(Command::PsfDump(PsfDumpConfig {
                blur,
                params: kernel_params(blur, &a.kernel)?,
                out: a.out,
            }))
        }
    }
}

/// Parses a full argument vector, program name first.
pub fn parse_args<I, T>(args: I) -> Result<Command, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    build(Cli::try_parse_from(args)?)
}
